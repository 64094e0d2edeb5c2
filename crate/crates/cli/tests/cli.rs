use std::path::Path;
use std::process::Command;

use pespec_cli::config::{preset, serialize};

/// A short CZ protocol on a coarse time step, cheap enough for end-to-end runs.
fn quick_config(dir: &Path) -> std::path::PathBuf {
    let mut cfg = preset("cz_ganzhorn").unwrap();
    cfg.drive.duration_ns = 20.0;
    cfg.drive.flank_width_ns = 2.0;
    cfg.sweep.fixed_t_ns = None;
    cfg.sim.dt_ns = 0.02;
    cfg.sweep.start_ghz = 4.8;
    cfg.sweep.stop_ghz = 5.2;
    cfg.sweep.step_ghz = 0.1;
    cfg.output.dir = dir.join("out").to_string_lossy().into_owned();
    let path = dir.join("quick.toml");
    std::fs::write(&path, serialize(&cfg)).unwrap();
    path
}

fn pespec(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_pespec")).args(args).output().unwrap()
}

#[test]
fn spectrum_writes_one_row_per_point_and_a_valid_svg() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = quick_config(tmp.path());
    let out = pespec(&["spectrum", "--config", cfg.to_str().unwrap(), "--svg"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("out/spectrum.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "omega3_ghz,J,Jpe0,Jpe1,wS_S,t_star_ns,status");
    assert_eq!(lines.len(), 6);
    assert!(lines[1..].iter().all(|l| l.ends_with(",ok")));
    let svg = std::fs::read_to_string(tmp.path().join("out/spectrum.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let total = doc.descendants().filter(|n| n.attribute("class") == Some("total")).count();
    assert_eq!(total, 1);
    // q1 at 5.089 GHz lies inside the grid and is drawn dashed
    assert!(doc
        .descendants()
        .any(|n| n.attribute("class") == Some("resonance") && n.attribute("stroke-dasharray").is_some()));
}

#[test]
fn grid_override_and_fixed_time() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = quick_config(tmp.path());
    let out = pespec(&["spectrum", "--config", cfg.to_str().unwrap(), "--grid", "5.0:5.1:0.1", "--fixed-t", "10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("out/spectrum.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "5");
    assert!(rows.iter().all(|r| r[5] == "10"));
}

#[test]
fn resonances_table_has_every_order_and_harmonic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = quick_config(tmp.path());
    let out = pespec(&["resonances", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("out/resonances.csv")).unwrap();
    let rows: Vec<Vec<String>> = csv.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 5 * 10);
    let keys: Vec<(String, String)> = rows[..10].iter().map(|r| (r[1].clone(), r[2].clone())).collect();
    let expected: Vec<(String, String)> = (1..=4)
        .map(|k| ("1".to_string(), k.to_string()))
        .chain((1..=6).map(|k| ("2".to_string(), k.to_string())))
        .collect();
    assert_eq!(keys, expected);
    let baseline = std::fs::read_to_string(tmp.path().join("out/resonances_baseline.csv")).unwrap();
    assert_eq!(baseline.lines().count(), 11);
    assert!(baseline.lines().nth(1).unwrap().ends_with(",all-points"));
    let statics = std::fs::read_to_string(tmp.path().join("out/static_resonances.csv")).unwrap();
    assert!(statics.lines().any(|l| l.starts_with("5.089,")));
}

#[test]
fn invalid_configuration_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.toml");
    std::fs::write(&path, "[qubit1]\nfrequency_ghz = -5.0\n").unwrap();
    let out = pespec(&["spectrum", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing key `coupler.max_frequency_ghz`"), "{err}");
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn bad_grid_is_rejected() {
    let out = pespec(&["spectrum", "--grid", "6:4:0.1"]);
    assert!(!out.status.success());
}

#[test]
fn selftest_passes() {
    let out = pespec(&["selftest"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 8, "{text}");
}

#[test]
fn gate_and_calibrate_write_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = quick_config(tmp.path());
    for (cmd, file, rows) in [("gate", "gate.csv", 21), ("calibrate", "calibration.csv", 1), ("tomo", "tomography.csv", 5)] {
        let out = pespec(&[cmd, "--config", cfg.to_str().unwrap()]);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let csv = std::fs::read_to_string(tmp.path().join("out").join(file)).unwrap();
        assert_eq!(csv.lines().count(), rows + 1, "{cmd}");
    }
}
