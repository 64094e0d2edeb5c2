//! CSV tables. Floats are written in Rust's shortest round-trip form, so
//! every value keeps full double precision and identical inputs give
//! identical bytes.

use pespec::resonance::{ResonanceRow, StaticResonance};
use pespec::spectrum::SpectrumPoint;
use pespec::tomography::TomographyPoint;

pub const SPECTRUM_HEADER: [&str; 7] = ["omega3_ghz", "J", "Jpe0", "Jpe1", "wS_S", "t_star_ns", "status"];
pub const TOMOGRAPHY_EXTRA: [&str; 2] = ["phase_rad", "bloch_len"];
pub const RESONANCE_HEADER: [&str; 5] = ["omega3_ghz", "n", "k", "M_value", "flagged"];

fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV of UTF-8 fields")
}

fn spectrum_fields(ghz: f64, p: &SpectrumPoint<f64>) -> Vec<String> {
    vec![
        ghz.to_string(),
        p.value.j.to_string(),
        p.value.j_pe0.to_string(),
        p.value.j_pe1.to_string(),
        p.value.ws_s.to_string(),
        p.time.to_string(),
        p.status.to_string(),
    ]
}

/// One row per point; `ghz` holds the grid in GHz as configured.
pub fn spectrum_csv(ghz: &[f64], points: &[SpectrumPoint<f64>]) -> String {
    table(&SPECTRUM_HEADER, ghz.iter().zip(points).map(|(&g, p)| spectrum_fields(g, p)))
}

pub fn tomography_csv(ghz: &[f64], points: &[TomographyPoint<f64>]) -> String {
    let header: Vec<&str> = SPECTRUM_HEADER.iter().chain(&TOMOGRAPHY_EXTRA).copied().collect();
    table(
        &header,
        ghz.iter().zip(points).map(|(&g, p)| {
            let mut row = spectrum_fields(g, &p.point);
            row.push(p.phase.to_string());
            row.push(p.bloch_length.to_string());
            row
        }),
    )
}

/// `rows` ordered by `ω_3` then `(n, k)`, with one block per grid point.
pub fn resonance_csv(ghz: &[f64], rows: &[ResonanceRow<f64>]) -> String {
    let per_point = if ghz.is_empty() { 0 } else { rows.len() / ghz.len() };
    table(
        &RESONANCE_HEADER,
        rows.iter().enumerate().map(|(i, r)| {
            vec![
                ghz[i / per_point.max(1)].to_string(),
                r.order.to_string(),
                r.k.to_string(),
                r.value.to_string(),
                r.flagged.to_string(),
            ]
        }),
    )
}

/// Baseline of `M⁽ⁿ⁾(kω_φ)` per `(n, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BaselineRow {
    pub order: usize,
    pub k: usize,
    pub baseline: f64,
    /// Points the median was taken over.
    pub points: usize,
}

pub fn baseline_csv(rows: &[BaselineRow], source: &str) -> String {
    table(
        &["n", "k", "baseline", "points", "source"],
        rows.iter().map(|r| {
            vec![r.order.to_string(), r.k.to_string(), r.baseline.to_string(), r.points.to_string(), source.to_string()]
        }),
    )
}

pub fn static_csv(lines: &[StaticResonance<f64>]) -> String {
    table(
        &["omega3_ghz", "transition"],
        lines.iter().map(|s| vec![pespec::num::to_ghz(s.omega3).to_string(), s.label()]),
    )
}

/// Reads `(omega3_ghz, J)` pairs from a spectrum table.
pub fn read_spectrum_j(text: &str) -> Option<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().ok()?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (wi, ji) = (col("omega3_ghz")?, col("J")?);
    r.records()
        .map(|rec| {
            let rec = rec.ok()?;
            Some((rec.get(wi)?.parse().ok()?, rec.get(ji)?.parse().ok()?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use pespec::metrics::JBreakdown;
    use pespec::spectrum::PointStatus;

    fn point(j: f64) -> SpectrumPoint<f64> {
        SpectrumPoint {
            omega3: 1.0,
            value: JBreakdown { j, j_pe0: j / 4.0, j_pe1: j / 4.0, ws_s: j / 2.0 },
            time: 436.0,
            status: PointStatus::Ok,
        }
    }

    #[test]
    fn spectrum_rows_and_precision() {
        let csv = spectrum_csv(&[4.0, 4.05], &[point(0.1), point(1.0 / 3.0)]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "omega3_ghz,J,Jpe0,Jpe1,wS_S,t_star_ns,status");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("4.05,0.3333333333333333,"));
        assert_eq!(read_spectrum_j(&csv).unwrap(), vec![(4.0, 0.1), (4.05, 1.0 / 3.0)]);
    }

    #[test]
    fn failure_reasons_are_quoted() {
        let mut p = point(f64::NAN);
        p.status = PointStatus::Failed("bad, very bad".into());
        let csv = spectrum_csv(&[4.0], &[p]);
        assert!(csv.lines().nth(1).unwrap().ends_with("\"failed: bad, very bad\""));
    }
}
