//! Command orchestration.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};
use pespec::metrics::{combined_j, extract_blocks, local_invariants, unitarity_penalty, weyl_coordinates};
use pespec::num::{ghz, mhz, to_ghz};
use pespec::resonance::{baseline, resonance_scan, static_resonances, ResonanceRow, DEFAULT_ORDERS};
use pespec::spectrum::{calibrate_protocol, spectrum_sweep, CalibrationStatus, SpectrumPoint};
use pespec::tomography::experimental_spectrum;
use pespec::{device, gates, perturbation, propagation};

use crate::config::RunConfig;
use crate::output::{self, BaselineRow};
use crate::svg::{emit_svg, PlotPoint, PlotStyle, VerticalLine};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// PE spectrum over the spectator grid.
    Spectrum,
    /// Resonance measures and the static-resonance catalogue over the grid.
    Resonances,
    /// `J` against time for the configured spectator frequency.
    Gate,
    /// Fixed-time spectrum through emulated gate tomography.
    Tomo,
    /// Gate time of minimal two-qubit `J_PE` with the spectator decoupled.
    Calibrate,
    /// Named-gate invariants and the perturbative toy-model oracle.
    Selftest,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub svg: bool,
    pub fixed_t: Option<f64>,
    /// `(start, stop, step)` in GHz.
    pub grid: Option<(f64, f64, f64)>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 1,
            Self::Numerical(_) => 2,
        }
    }
}

fn validation(e: impl std::fmt::Display) -> RunError {
    RunError::Validation(e.to_string())
}

fn numerical(e: impl std::fmt::Display) -> RunError {
    RunError::Numerical(e.to_string())
}

/// Parses `START:STOP:STEP` (GHz).
pub fn parse_grid(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected START:STOP:STEP, got `{s}`"));
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    let (start, stop, step) = (v[0], v[1], v[2]);
    if !(step > 0.0 && stop >= start && start > 0.0) || !stop.is_finite() {
        return Err(format!("grid `{s}` needs 0 < START ≤ STOP and STEP > 0"));
    }
    Ok((start, stop, step))
}

/// Applies command-line overrides to `cfg`.
pub fn apply(cfg: &mut RunConfig, o: &Overrides) -> Result<(), RunError> {
    if let Some(out) = &o.out {
        cfg.output.dir = out.to_string_lossy().into_owned();
    }
    if let Some(jobs) = o.jobs {
        cfg.sweep.jobs = jobs;
    }
    if o.svg {
        cfg.output.svg = true;
    }
    if let Some(t) = o.fixed_t {
        if !(t >= 0.0 && t <= cfg.drive.duration_ns) {
            return Err(validation(format!("--fixed-t {t} ns lies outside [0, {}] ns", cfg.drive.duration_ns)));
        }
        cfg.sweep.mode = "fixed-time".into();
        cfg.sweep.fixed_t_ns = Some(t);
    }
    if let Some((start, stop, step)) = o.grid {
        cfg.sweep.start_ghz = start;
        cfg.sweep.stop_ghz = stop;
        cfg.sweep.step_ghz = step;
    }
    Ok(())
}

/// Prints a line to stdout; a closed pipe is ignored.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf, RunError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| validation(format!("cannot write {}: {e}", path.display())))?;
    info!("wrote {}", path.display());
    Ok(path)
}

/// Runs `command` and returns the files written.
pub fn run(command: Command, cfg: &RunConfig) -> Result<Vec<PathBuf>, RunError> {
    let dir = PathBuf::from(&cfg.output.dir);
    if command != Command::Selftest {
        fs::create_dir_all(&dir).map_err(|e| validation(format!("cannot create {}: {e}", dir.display())))?;
    }
    match command {
        Command::Spectrum => spectrum(cfg, &dir),
        Command::Resonances => resonances(cfg, &dir),
        Command::Gate => gate(cfg, &dir),
        Command::Tomo => tomo(cfg, &dir),
        Command::Calibrate => calibrate(cfg, &dir),
        Command::Selftest => selftest().map(|_| Vec::new()),
    }
}

fn static_lines(cfg: &RunConfig) -> Result<Vec<VerticalLine>, RunError> {
    let device = cfg.device().map_err(validation)?;
    let (lo, hi) = (ghz(cfg.sweep.start_ghz), ghz(cfg.sweep.stop_ghz));
    let catalogue = static_resonances(&device, cfg.resonance.max_excitations, lo, hi);
    let mut lines: Vec<VerticalLine> = Vec::new();
    for s in catalogue {
        let x = to_ghz(s.omega3);
        // transitions sharing a frequency share one line
        match lines.last_mut() {
            Some(l) if (l.x - x).abs() < 1e-9 => {
                l.label.push_str(", ");
                l.label.push_str(&s.label());
            }
            _ => {
                let dashed = device.qubits[..2].iter().any(|q| (to_ghz(q.frequency) - x).abs() < 1e-9);
                lines.push(VerticalLine { x, label: s.label(), dashed });
            }
        }
    }
    Ok(lines)
}

fn spectrum_svg(cfg: &RunConfig, ghz_grid: &[f64], points: &[SpectrumPoint<f64>], title: &str) -> Result<String, RunError> {
    let plot: Vec<PlotPoint> = ghz_grid
        .iter()
        .zip(points)
        .map(|(&x, p)| PlotPoint { x, total: p.value.j, block0: p.value.j_pe0, block1: p.value.j_pe1 })
        .collect();
    let style = PlotStyle { title: title.into(), y_label: "J".into(), components: true, lines: static_lines(cfg)? };
    Ok(emit_svg(&plot, &style))
}

fn spectrum(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let sweep = cfg.sweep_config().map_err(validation)?;
    let device = cfg.device().map_err(validation)?;
    let grid = cfg.grid_ghz();
    let points = spectrum_sweep(&device, &cfg.pulse(), &sweep).map_err(validation)?;
    let failed = points.iter().filter(|p| !p.is_ok()).count();
    if failed > 0 {
        warn!("{failed} of {} points failed", points.len());
    }
    let mut files = vec![write(dir, "spectrum.csv", &output::spectrum_csv(&grid, &points))?];
    if cfg.output.svg {
        let svg = spectrum_svg(cfg, &grid, &points, "PE spectrum")?;
        files.push(write(dir, "spectrum.svg", &svg)?);
    }
    Ok(files)
}

fn resonances(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let device = cfg.device().map_err(validation)?;
    let grid = cfg.grid_ghz();
    let omegas: Vec<f64> = grid.iter().map(|&g| ghz(g)).collect();
    let rcfg = cfg.resonance_config();
    let rows = resonance_scan(&device, mhz(cfg.qubit3.anharmonicity_mhz), &omegas, &rcfg, cfg.sweep.jobs)
        .map_err(validation)?;
    let mut files = vec![write(dir, "resonances.csv", &output::resonance_csv(&grid, &rows))?];

    // the baseline uses J from a spectrum of the same grid when one exists
    let spectrum_j = fs::read_to_string(dir.join("spectrum.csv"))
        .ok()
        .and_then(|t| output::read_spectrum_j(&t))
        .filter(|pairs| pairs.len() == grid.len() && pairs.iter().zip(&grid).all(|((w, _), g)| (w - g).abs() < 1e-9));
    let (j, floor, source) = match &spectrum_j {
        Some(pairs) => (pairs.iter().map(|p| p.1).collect(), cfg.resonance.baseline_floor, "spectrum.csv"),
        None => (vec![0.0; grid.len()], 1.0, "all-points"),
    };
    let per_point = rows.len() / grid.len().max(1);
    let mut baselines = Vec::new();
    for (slot, &(order, kmax)) in DEFAULT_ORDERS.iter().enumerate() {
        let offset: usize = DEFAULT_ORDERS[..slot].iter().map(|o| o.1).sum();
        for k in 1..=kmax {
            let values: Vec<f64> = (0..grid.len()).map(|p| rows[p * per_point + offset + k - 1].value).collect();
            let used = j.iter().filter(|&&x| x < floor).count();
            if let Some(b) = baseline(&values, &j, floor) {
                baselines.push(BaselineRow { order, k, baseline: b, points: used });
            }
        }
    }
    files.push(write(dir, "resonances_baseline.csv", &output::baseline_csv(&baselines, source))?);
    let catalogue = static_resonances(&device, cfg.resonance.max_excitations, ghz(cfg.sweep.start_ghz), ghz(cfg.sweep.stop_ghz));
    files.push(write(dir, "static_resonances.csv", &output::static_csv(&catalogue))?);
    if cfg.output.svg {
        // one curve per reference frequency of first order
        let plot: Vec<PlotPoint> = (0..grid.len())
            .map(|p| {
                let row = |k: usize| -> &ResonanceRow<f64> { &rows[p * per_point + k] };
                PlotPoint { x: grid[p], total: row(0).value, block0: row(1).value, block1: row(2).value }
            })
            .collect();
        let style = PlotStyle {
            title: "First-order resonance measure at ω_φ (black), 2ω_φ, 3ω_φ".into(),
            y_label: "M".into(),
            components: true,
            lines: static_lines(cfg)?,
        };
        files.push(write(dir, "resonances.svg", &emit_svg(&plot, &style))?);
    }
    Ok(files)
}

fn gate(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let device = cfg.device().map_err(validation)?;
    let ops = device::build_operators(&device).map_err(validation)?;
    let prop = cfg.propagation().map_err(validation)?;
    let weights = cfg.weights().map_err(validation)?;
    let basis = ops.basis();
    let mut rows = Vec::new();
    let diag = propagation::propagate_observed(&ops, &cfg.pulse(), &prop, |t, v| {
        let b = extract_blocks(v, &prop.columns, &basis, t)?;
        let j = combined_j(&b, &weights);
        let w = weyl_coordinates(&b.u0);
        let g = local_invariants(&b.u0);
        rows.push(vec![
            t.to_string(),
            j.j.to_string(),
            j.j_pe0.to_string(),
            j.j_pe1.to_string(),
            j.ws_s.to_string(),
            g.g1.to_string(),
            g.g2.to_string(),
            g.g3.to_string(),
            w.c1.to_string(),
            w.c2.to_string(),
            w.c3.to_string(),
            unitarity_penalty(&b.u0).to_string(),
            unitarity_penalty(&b.u1).to_string(),
        ]);
        Ok(())
    })
    .map_err(numerical)?;
    let best = rows
        .iter()
        .min_by(|a, b| a[1].parse::<f64>().unwrap().total_cmp(&b[1].parse::<f64>().unwrap()))
        .expect("at least the initial checkpoint");
    say(&format!("min J = {} at t = {} ns (max norm drift {:e})", best[1], best[0], diag.max_norm_drift));
    let header = ["time_ns", "J", "Jpe0", "Jpe1", "wS_S", "g1", "g2", "g3", "c1", "c2", "c3", "delta_u0", "delta_u1"];
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(validation)?;
    for r in &rows {
        w.write_record(r).map_err(validation)?;
    }
    let text = String::from_utf8(w.into_inner().map_err(validation)?).map_err(validation)?;
    Ok(vec![write(dir, "gate.csv", &text)?])
}

fn tomo(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let mut sweep = cfg.sweep_config().map_err(validation)?;
    sweep.mode = pespec::spectrum::EvalMode::FixedTime(cfg.fixed_time());
    let device = cfg.device().map_err(validation)?;
    let grid = cfg.grid_ghz();
    let points = experimental_spectrum(&device, &cfg.pulse(), &sweep).map_err(validation)?;
    let mut files = vec![write(dir, "tomography.csv", &output::tomography_csv(&grid, &points))?];
    if cfg.output.svg {
        let pts: Vec<SpectrumPoint<f64>> = points.iter().map(|p| p.point.clone()).collect();
        let svg = spectrum_svg(cfg, &grid, &pts, &format!("Spectrum from tomography at {} ns", cfg.fixed_time()))?;
        files.push(write(dir, "tomography.svg", &svg)?);
    }
    Ok(files)
}

fn calibrate(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let device = cfg.device().map_err(validation)?;
    let prop = cfg.propagation().map_err(validation)?;
    let weights = cfg.weights().map_err(validation)?;
    let cal = calibrate_protocol(&device, &cfg.pulse(), &prop, &weights, cfg.sim.calibration_threshold)
        .map_err(numerical)?;
    let status = match cal.status {
        CalibrationStatus::Calibrated => "calibrated",
        CalibrationStatus::Failed => "failed",
    };
    say(&format!("t* = {} ns, J_PE = {} ({status})", cal.t_star, cal.j_pe));
    let text = format!("t_star_ns,Jpe,status\n{},{},{status}\n", cal.t_star, cal.j_pe);
    Ok(vec![write(dir, "calibration.csv", &text)?])
}

/// One self-test line.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Named-gate invariants and the toy-model perturbation oracle.
pub fn selftest_checks() -> Vec<Check> {
    let mut out = Vec::new();
    let table = [
        ("identity", gates::identity::<f64>(), (1.0, 0.0, 3.0)),
        ("CNOT", gates::cnot(), (0.0, 0.0, 1.0)),
        ("CZ", gates::cz(), (0.0, 0.0, 1.0)),
        ("iSWAP", gates::iswap(), (0.0, 0.0, -1.0)),
        ("SWAP", gates::swap(), (-1.0, 0.0, -3.0)),
    ];
    for (name, u, e) in table {
        let g = local_invariants(&u);
        let err = (g.g1 - e.0).abs().max((g.g2 - e.1).abs()).max((g.g3 - e.2).abs());
        out.push(Check {
            name: format!("invariants of {name}"),
            pass: err < 1e-12,
            detail: format!("({:.6}, {:.6}, {:.6})", g.g1, g.g2, g.g3),
        });
    }
    let w = weyl_coordinates(&gates::cnot::<f64>());
    let err = (w.c1 - std::f64::consts::FRAC_PI_2).abs().max(w.c2.abs()).max(w.c3.abs());
    out.push(Check {
        name: "Weyl coordinates of CNOT".into(),
        pass: err < 1e-12,
        detail: format!("({:.6}, {:.6}, {:.6})", w.c1, w.c2, w.c3),
    });

    let toy = perturbation::ToyModel::new(1.5, 0.5, 0.1).expect("valid toy model");
    let e = toy.energies();
    let v = toy.drive_matrix();
    let dt = 0.002;
    let omega = 2.0 * toy.splitting();
    let drive = |a: f64, t_end: f64, dt: f64, w: f64, offset: f64| -> Vec<f64> {
        let n = (t_end / dt).round() as usize + 1;
        (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                a * (std::f64::consts::PI * t / t_end).sin().powi(2) * (w * t).cos() + offset
            })
            .collect()
    };
    let discrepancy = |a: f64| {
        let u = drive(a, 60.0, dt, omega, 0.0);
        let exact = perturbation::exact_amplitude(&e, &v, &u, dt, 0, 1);
        (exact - perturbation::p2_amplitude(&e, &v, &u, dt, 0, 1).amplitude).norm()
    };
    let ratio = discrepancy(0.4) / discrepancy(0.2);
    out.push(Check {
        name: "toy model: exact − perturbative is third order".into(),
        pass: (ratio - 8.0).abs() <= 1.6,
        detail: format!("halving ratio {ratio:.3}"),
    });
    let u = drive(0.3, 300.0, 0.005, omega / 3.0, 0.05);
    let quad = perturbation::p2_amplitude(&e, &v, &u, 0.005, 1, 0).second;
    let closed = -perturbation::second_order_closed_form(&toy, &u, 0.005, 0);
    let rel = (quad - closed).norm() / closed.norm();
    out.push(Check {
        name: "toy model: closed form vs nested quadrature".into(),
        pass: rel < 1e-3,
        detail: format!("relative deviation {rel:.2e}"),
    });
    out
}

fn selftest() -> Result<(), RunError> {
    let checks = selftest_checks();
    for c in &checks {
        say(&format!("{} {} [{}]", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail));
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        return Err(RunError::Numerical(format!("{failed} self-test checks failed")));
    }
    Ok(())
}
