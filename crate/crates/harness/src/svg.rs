//! Self-contained SVG line charts of epidemic curves.
//!
//! One color per curve; s, i and r are drawn solid, dashed and dotted, each
//! with a shaded band of ±1 standard error.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use dynepi_core::epidemic::EpidemicCurve;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];
const DASHES: [(&str, &str); 3] = [("s", ""), ("i", "6 4"), ("r", "2 3")];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    t_max: f64,
}

impl Frame {
    fn x(&self, t: f64) -> f64 {
        LEFT + (WIDTH - LEFT - RIGHT) * if self.t_max > 0.0 { t / self.t_max } else { 0.0 }
    }
    fn y(&self, p: f64) -> f64 {
        TOP + (HEIGHT - TOP - BOTTOM) * (1.0 - p.clamp(0.0, 1.0))
    }
}

fn points(frame: &Frame, grid: &[f64], ys: impl Iterator<Item = f64>) -> String {
    grid.iter().zip(ys).map(|(&t, y)| format!("{:.2},{:.2}", frame.x(t), frame.y(y))).collect::<Vec<_>>().join(" ")
}

/// SVG document for `curves`, labelled by `labels` (one per curve).
pub fn svg_document(curves: &[EpidemicCurve], labels: &[String], title: &str) -> Result<String> {
    if curves.is_empty() {
        bail!("no curves to plot");
    }
    if labels.len() != curves.len() {
        bail!("{} labels for {} curves", labels.len(), curves.len());
    }
    let t_max = curves.iter().flat_map(|c| c.grid.last().copied()).fold(0.0, f64::max);
    let f = Frame { t_max };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{LEFT}" y="24" font-size="15">{}</text>"#, escape(title));
    // axes, ticks and grid
    let _ = writeln!(s, r##"<g class="axes" stroke="#444" fill="none">"##);
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT},{TOP} V{} H{}"/>"#,
        HEIGHT - BOTTOM,
        WIDTH - RIGHT
    );
    let _ = writeln!(s, "</g>");
    for k in 0..=5 {
        let p = k as f64 / 5.0;
        let y = f.y(p);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{p:.1}</text>"##,
            WIDTH - RIGHT,
            LEFT - 6.0,
            y + 4.0
        );
        let t = t_max * k as f64 / 5.0;
        let x = f.x(t);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            HEIGHT - BOTTOM + 18.0,
            format_tick(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{}" text-anchor="middle">t</text><text x="16" y="{:.2}" transform="rotate(-90 16 {:.2})" text-anchor="middle">proportion</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 12.0,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (c, curve) in curves.iter().enumerate() {
        let color = PALETTE[c % PALETTE.len()];
        let _ = writeln!(s, r#"<g class="curve" stroke="{color}" fill="{color}">"#);
        for (k, (_, dash)) in DASHES.iter().enumerate() {
            let (mean, se) = match k {
                0 => (&curve.s, &curve.s_se),
                1 => (&curve.i, &curve.i_se),
                _ => (&curve.r, &curve.r_se),
            };
            if se.iter().any(|&e| e > 0.0) {
                let upper = points(&f, &curve.grid, mean.iter().zip(se).map(|(m, e)| m + e));
                let lower: Vec<f64> = mean.iter().zip(se).map(|(m, e)| m - e).rev().collect();
                let grid_rev: Vec<f64> = curve.grid.iter().rev().copied().collect();
                let lower = points(&f, &grid_rev, lower.into_iter());
                let _ = writeln!(s, r#"<polygon points="{upper} {lower}" fill-opacity="0.15" stroke="none"/>"#);
            }
            let dash = if dash.is_empty() { String::new() } else { format!(r#" stroke-dasharray="{dash}""#) };
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke-width="1.6"{dash}/>"#,
                points(&f, &curve.grid, mean.iter().copied())
            );
        }
        let _ = writeln!(s, "</g>");
    }
    // legend: one entry per curve, then the line-style key
    let lx = WIDTH - RIGHT + 16.0;
    for (c, label) in labels.iter().enumerate() {
        let y = TOP + 10.0 + 20.0 * c as f64;
        let color = PALETTE[c % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<g class="legend-entry"><rect x="{lx}" y="{:.1}" width="14" height="10" fill="{color}"/><text x="{}" y="{:.1}">{}</text></g>"#,
            y - 9.0,
            lx + 20.0,
            y,
            escape(label)
        );
    }
    let ky = TOP + 30.0 + 20.0 * labels.len() as f64;
    for (k, (name, dash)) in DASHES.iter().enumerate() {
        let y = ky + 18.0 * k as f64;
        let dash = if dash.is_empty() { String::new() } else { format!(r#" stroke-dasharray="{dash}""#) };
        let _ = writeln!(
            s,
            r##"<g class="style-key"><line x1="{lx}" y1="{:.1}" x2="{}" y2="{:.1}" stroke="#444" stroke-width="1.6"{dash}/><text x="{}" y="{:.1}">{name}</text></g>"##,
            y - 4.0,
            lx + 24.0,
            y - 4.0,
            lx + 30.0,
            y
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn format_tick(t: f64) -> String {
    let s = format!("{t:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn render_svg(curves: &[EpidemicCurve], labels: &[String], out_path: &Path) -> Result<()> {
    let title = out_path.file_stem().and_then(|s| s.to_str()).unwrap_or("epidemic curves");
    let doc = svg_document(curves, labels, title)?;
    std::fs::write(out_path, doc).with_context(|| format!("writing {}", out_path.display()))
}
