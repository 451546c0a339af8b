//! Minimal SVG 1.1 writer for region plots. No external assets.

use platform_eq::regions::{RegionGrid, Verdict};
use std::fmt::Write;

#[derive(Debug, Clone, Copy)]
pub struct PlotStyle {
    /// Pixel size of one panel.
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    /// Polylines in `(phi, beta)`.
    pub segments: Vec<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub subtitle: String,
    pub classifier: String,
    pub grid: RegionGrid,
    pub curves: Vec<Curve>,
}

pub fn color(v: Verdict) -> &'static str {
    match v {
        Verdict::Positive | Verdict::Increasing => "#2166ac",
        Verdict::Negative | Verdict::Decreasing => "#d6301d",
        Verdict::Indeterminate => "#e4e4e4",
        Verdict::Boundary => "#555555",
    }
}

const DASHES: [&str; 4] = ["", "6,3", "2,2", "8,3,2,3"];

const LEFT: f64 = 62.0;
const RIGHT: f64 = 18.0;
const TOP: f64 = 46.0;
const BOTTOM: f64 = 48.0;
const LEGEND_ROW: f64 = 18.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Roughly five ticks at 1, 2, 2.5 or 5 times a power of ten.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{:.2}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

/// Panels side by side with a shared legend underneath.
pub fn render(title: &str, panels: &[Panel], legend: &[(Verdict, String)], style: PlotStyle) -> String {
    let (pw, ph) = (style.width as f64, style.height as f64);
    let mut curve_labels: Vec<&str> = Vec::new();
    for p in panels {
        for c in &p.curves {
            if !curve_labels.contains(&c.label.as_str()) {
                curve_labels.push(&c.label);
            }
        }
    }
    let legend_rows = legend.len() + curve_labels.len();
    let total_w = pw * panels.len().max(1) as f64;
    let total_h = ph + 12.0 + LEGEND_ROW * legend_rows as f64;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{total_w}" height="{total_h}" viewBox="0 0 {total_w} {total_h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, esc(title));
    let _ = writeln!(s, r#"<rect width="{total_w}" height="{total_h}" fill="white"/>"#);
    for (pi, panel) in panels.iter().enumerate() {
        let x0 = pw * pi as f64;
        draw_panel(&mut s, title, panel, x0, pw, ph, &curve_labels);
    }
    // legend
    let mut y = ph + 8.0;
    for (v, text) in legend {
        let _ = writeln!(s, r#"<rect x="{LEFT}" y="{y}" width="14" height="12" fill="{}" stroke="black" stroke-width="0.5"/>"#, color(*v));
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, LEFT + 20.0, y + 10.0, esc(text));
        y += LEGEND_ROW;
    }
    for (ci, label) in curve_labels.iter().enumerate() {
        let dash = DASHES[ci % DASHES.len()];
        let _ = writeln!(
            s,
            r#"<line x1="{LEFT}" y1="{}" x2="{}" y2="{}" stroke="black" stroke-width="2" stroke-dasharray="{dash}"/>"#,
            y + 6.0,
            LEFT + 14.0,
            y + 6.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, LEFT + 20.0, y + 10.0, esc(label));
        y += LEGEND_ROW;
    }
    s.push_str("</svg>\n");
    s
}

fn draw_panel(s: &mut String, title: &str, panel: &Panel, x0: f64, pw: f64, ph: f64, curve_labels: &[&str]) {
    let g = &panel.grid;
    let spec = &g.spec;
    let (ax, ay) = (x0 + LEFT, TOP);
    let (aw, ah) = (pw - LEFT - RIGHT, ph - TOP - BOTTOM);
    let (phi_lo, phi_hi) = spec.phi_range;
    let (b_lo, b_hi) = spec.beta_range;
    let px = |phi: f64| ax + (phi - phi_lo) / (phi_hi - phi_lo) * aw;
    let py = |beta: f64| ay + ah - (beta - b_lo) / (b_hi - b_lo) * ah;
    let _ = writeln!(s, r#"<g id="panel{}">"#, (x0 / pw).round());
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#, ax + aw / 2.0, esc(title));
    let _ = writeln!(s, r#"<text x="{}" y="34" text-anchor="middle">{}</text>"#, ax + aw / 2.0, esc(&format!("{} ({})", panel.subtitle, panel.classifier)));
    // cells, merged into horizontal runs of equal verdict
    let (cw, ch) = (aw / spec.width as f64, ah / spec.height as f64);
    let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
    for j in 0..spec.height {
        let y = ay + ah - (j + 1) as f64 * ch;
        let mut i = 0;
        while i < spec.width {
            let v = g.cell(i, j).label.verdict;
            let start = i;
            while i < spec.width && g.cell(i, j).label.verdict == v {
                i += 1;
            }
            let _ = writeln!(
                s,
                r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}"/>"#,
                ax + start as f64 * cw,
                y,
                (i - start) as f64 * cw,
                ch,
                color(v)
            );
        }
    }
    s.push_str("</g>\n");
    for c in &panel.curves {
        let ci = curve_labels.iter().position(|l| *l == c.label).unwrap_or(0);
        let dash = DASHES[ci % DASHES.len()];
        for seg in &c.segments {
            let pts: Vec<String> = seg.iter().map(|&(f, b)| format!("{:.3},{:.3}", px(f), py(b))).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="black" stroke-width="2" stroke-dasharray="{dash}"/>"#,
                pts.join(" ")
            );
        }
    }
    // axes
    let _ = writeln!(s, r#"<rect x="{ax}" y="{ay}" width="{aw}" height="{ah}" fill="none" stroke="black"/>"#);
    for t in ticks(phi_lo, phi_hi) {
        let x = px(t);
        let _ = writeln!(s, r#"<line x1="{x:.3}" y1="{}" x2="{x:.3}" y2="{}" stroke="black"/>"#, ay + ah, ay + ah + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.3}" y="{}" text-anchor="middle">{}</text>"#, ay + ah + 18.0, fmt_tick(t));
    }
    for t in ticks(b_lo, b_hi) {
        let y = py(t);
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.3}" x2="{ax}" y2="{y:.3}" stroke="black"/>"#, ax - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.3}" text-anchor="end">{}</text>"#, ax - 8.0, y + 4.0, fmt_tick(t));
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">φ<tspan baseline-shift="sub" font-size="9">kk</tspan></text>"#,
        ax + aw / 2.0,
        ay + ah + 38.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" transform="rotate(-90 {} {})">β<tspan baseline-shift="sub" font-size="9">k</tspan></text>"#,
        x0 + 16.0,
        ay + ah / 2.0,
        x0 + 16.0,
        ay + ah / 2.0
    );
    s.push_str("</g>\n");
}
