//! Single-panel SVG line plots of spectra.
//!
//! Output is a pure function of the input: coordinates are printed with a
//! fixed number of decimals and elements appear in input order.

use std::fmt::Write;

/// One abscissa with the total curve and the two block curves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlotPoint {
    /// `ω_3 / 2π` in GHz.
    pub x: f64,
    pub total: f64,
    pub block0: f64,
    pub block1: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerticalLine {
    pub x: f64,
    pub label: String,
    pub dashed: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlotStyle {
    pub title: String,
    pub y_label: String,
    /// Also draw the two block curves.
    pub components: bool,
    pub lines: Vec<VerticalLine>,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 450.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

pub const TOTAL_COLOR: &str = "#000000";
pub const BLOCK0_COLOR: &str = "#1f77b4";
pub const BLOCK1_COLOR: &str = "#ff7f0e";
pub const LINE_COLOR: &str = "#7f9fcf";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        MARGIN_LEFT + (x - self.x0) / (self.x1 - self.x0) * w
    }

    fn py(&self, y: f64) -> f64 {
        let h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        HEIGHT - MARGIN_BOTTOM - (y - self.y0) / (self.y1 - self.y0) * h
    }
}

/// Polylines through the finite values of `ys`; non-finite values break
/// the curve.
fn polylines(out: &mut String, frame: &Frame, xs: &[f64], ys: &[f64], color: &str, class: &str) {
    let mut run: Vec<(f64, f64)> = Vec::new();
    let flush = |run: &mut Vec<(f64, f64)>, out: &mut String| {
        if run.len() >= 2 {
            let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                out,
                r#"<polyline class="{class}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
        } else if let [(x, y)] = run[..] {
            let _ = writeln!(out, r#"<circle class="{class}" cx="{x:.2}" cy="{y:.2}" r="2" fill="{color}"/>"#);
        }
        run.clear();
    };
    for (&x, &y) in xs.iter().zip(ys) {
        if y.is_finite() {
            run.push((frame.px(x), frame.py(y)));
        } else {
            flush(&mut run, out);
        }
    }
    flush(&mut run, out);
}

/// Renders `points` (sorted by `x`, nonempty) as an SVG document.
pub fn emit_svg(points: &[PlotPoint], style: &PlotStyle) -> String {
    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let mut x0 = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut x1 = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(x1 > x0) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let mut y1 = points
        .iter()
        .flat_map(|p| {
            let comps = if style.components { [p.total, p.block0, p.block1] } else { [p.total; 3] };
            comps.into_iter()
        })
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    if !(y1 > 0.0) {
        y1 = 1.0;
    }
    let frame = Frame { x0, x1, y0: 0.0, y1: y1 * 1.05 };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(&style.title));

    // axes and ticks
    let (left, right) = (frame.px(x0), frame.px(x1));
    let (bottom, top) = (frame.py(0.0), frame.py(frame.y1));
    let _ = writeln!(out, r#"<path d="M{left:.2},{top:.2} V{bottom:.2} H{right:.2}" fill="none" stroke="black"/>"#);
    for k in 0..=5 {
        let x = x0 + (x1 - x0) * k as f64 / 5.0;
        let px = frame.px(x);
        let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{bottom:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, bottom + 5.0);
        let _ = writeln!(out, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{x:.3}</text>"#, bottom + 18.0);
        let y = frame.y1 * k as f64 / 5.0;
        let py = frame.py(y);
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{py:.2}" x2="{left:.2}" y2="{py:.2}" stroke="black"/>"#, left - 5.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y:.3}</text>"#, left - 8.0, py + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">ω₃/2π (GHz)</text>"#, (left + right) / 2.0, HEIGHT - 10.0);
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        escape(&style.y_label)
    );

    for line in &style.lines {
        if line.x < x0 || line.x > x1 {
            continue;
        }
        let px = frame.px(line.x);
        let dash = if line.dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<line class="resonance" x1="{px:.2}" y1="{top:.2}" x2="{px:.2}" y2="{bottom:.2}" stroke="{LINE_COLOR}"{dash}><title>{}</title></line>"#,
            escape(&line.label)
        );
    }

    if style.components {
        let b0: Vec<f64> = points.iter().map(|p| p.block0).collect();
        let b1: Vec<f64> = points.iter().map(|p| p.block1).collect();
        polylines(&mut out, &frame, &xs, &b0, BLOCK0_COLOR, "block0");
        polylines(&mut out, &frame, &xs, &b1, BLOCK1_COLOR, "block1");
    }
    let total: Vec<f64> = points.iter().map(|p| p.total).collect();
    polylines(&mut out, &frame, &xs, &total, TOTAL_COLOR, "total");

    if style.components {
        let entries = [("J", TOTAL_COLOR), ("spectator |0⟩", BLOCK0_COLOR), ("spectator |1⟩", BLOCK1_COLOR)];
        for (k, (name, color)) in entries.iter().enumerate() {
            let y = MARGIN_TOP + 12.0 + 16.0 * k as f64;
            let x = right - 130.0;
            let _ = writeln!(out, r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="1.5"/>"#, x + 20.0);
            let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x + 26.0, y + 4.0, escape(name));
        }
    }
    out.push_str("</svg>\n");
    out
}
