//! Self-contained SVG line charts of NMSE (dB) against the swept variable.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{invalid, Result};
use crate::evaluation::ResultRow;

/// Which column varies across the rows of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Epsilon,
    Alpha,
    Rate,
}

impl Axis {
    fn label(self) -> &'static str {
        match self {
            Axis::Epsilon => "bit cross-over probability ε",
            Axis::Alpha => "measurement rate α = N/M",
            Axis::Rate => "quantization rate B (bits/vector)",
        }
    }

    fn value(self, r: &ResultRow) -> f64 {
        match self {
            Axis::Epsilon => r.epsilon.unwrap_or(f64::NAN),
            Axis::Alpha => r.alpha,
            Axis::Rate => r.bits as f64,
        }
    }
}

fn distinct(values: impl Iterator<Item = f64>) -> usize {
    let mut v: Vec<u64> = values.map(f64::to_bits).collect();
    v.sort_unstable();
    v.dedup();
    v.len()
}

/// Picks the x axis: the first of α, B, ε that takes more than one value.
pub fn detect_axis(rows: &[ResultRow]) -> Axis {
    if distinct(rows.iter().map(|r| r.alpha)) > 1 {
        Axis::Alpha
    } else if distinct(rows.iter().map(|r| r.bits as f64)) > 1 {
        Axis::Rate
    } else {
        Axis::Epsilon
    }
}

/// One polyline: a scheme at fixed values of the non-swept variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub fn build_series(rows: &[ResultRow], axis: Axis) -> Vec<Series> {
    let mut groups: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        let qualifier = match axis {
            Axis::Epsilon => String::new(),
            _ => match r.epsilon {
                Some(e) => format!(" (ε={e})"),
                None => " (custom channel)".to_string(),
            },
        };
        groups
            .entry((r.scheme.label().to_string(), qualifier))
            .or_default()
            .push((axis.value(r), r.nmse_db));
    }
    groups
        .into_iter()
        .map(|((scheme, q), mut points)| {
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series { label: format!("{scheme}{q}"), points }
        })
        .collect()
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 210.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the rows as an SVG chart, one polyline per series.
pub fn render_svg(rows: &[ResultRow], title: &str) -> Result<String> {
    if rows.is_empty() {
        return Err(invalid("no rows to plot"));
    }
    let axis = detect_axis(rows);
    let series = build_series(rows, axis);
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).filter(|x| x.is_finite());
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !x0.is_finite() {
        return Err(invalid("no finite x values to plot"));
    }
    let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
    let (mut y0, mut y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let pad = ((y1 - y0) * 0.08).max(0.25);
    y0 = (y0 - pad).floor();
    y1 = (y1 + pad).ceil();

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, escape(title));

    for t in nice_ticks(y0, y1, 8) {
        let y = sy(t);
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, fmt_tick(t));
    }
    for t in nice_ticks(x0, x1, 8) {
        let x = sx(t);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/>"##, TOP + ph);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, fmt_tick(t));
    }
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        escape(axis.label())
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">NMSE (dB)</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    for (idx, ser) in series.iter().enumerate() {
        let color = COLORS[idx % COLORS.len()];
        let dash = if idx >= COLORS.len() { r#" stroke-dasharray="6 3""# } else { "" };
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(|p| p.0.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2"{dash} points="{}"/>"#, pts.join(" "));
        for p in &pts {
            let (x, y) = p.split_once(',').expect("formatted above");
            let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
        }
        let ly = TOP + 10.0 + idx as f64 * 20.0;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>"#, lx + 24.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 30.0, ly + 4.0, escape(&ser.label));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::Scheme;

    fn row(scheme: Scheme, eps: f64, alpha: f64, bits: u32, db: f64) -> ResultRow {
        ResultRow {
            scheme,
            m: 20,
            n: (alpha * 20.0) as usize,
            k: 2,
            bits,
            epsilon: Some(eps),
            alpha,
            trials: 10,
            nmse_db: db,
            seed: 1,
            wall_s: None,
        }
    }

    #[test]
    fn epsilon_sweep_has_one_line_per_scheme() {
        let mut rows = Vec::new();
        for (i, eps) in [0.0, 0.01, 0.1].into_iter().enumerate() {
            for s in Scheme::ALL {
                rows.push(row(s, eps, 0.5, 8, -5.0 + i as f64));
            }
        }
        assert_eq!(detect_axis(&rows), Axis::Epsilon);
        let svg = render_svg(&rows, "table").unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn alpha_sweep_splits_by_epsilon() {
        let mut rows = Vec::new();
        for a in [0.4, 0.5] {
            for eps in [0.0, 0.01] {
                rows.push(row(Scheme::CovqE2e, eps, a, 8, -3.0));
                rows.push(row(Scheme::CovqQ, eps, a, 8, -1.0));
            }
        }
        assert_eq!(detect_axis(&rows), Axis::Alpha);
        let series = build_series(&rows, Axis::Alpha);
        assert_eq!(series.len(), 4);
        assert!(series.iter().all(|s| s.points.len() == 2));
    }

    #[test]
    fn ticks_are_round() {
        assert_eq!(nice_ticks(-6.0, 0.0, 6), vec![-6.0, -5.0, -4.0, -3.0, -2.0, -1.0, 0.0]);
        assert_eq!(fmt_tick(0.0500), "0.05");
        assert!(render_svg(&[], "x").is_err());
    }
}
