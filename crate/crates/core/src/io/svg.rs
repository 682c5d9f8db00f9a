//! Minimal SVG scatter-and-contour plots.

use std::fmt::Write as _;

use crate::grid::{Contour, Dataset, DesignCondition};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 50.0;
/// Scatter points beyond this count are thinned by a fixed stride.
const MAX_POINTS: usize = 5000;
const COLORS: [&str; 4] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd"];

pub struct PlotLayer<'a> {
    pub name: &'a str,
    pub contour: &'a Contour,
    pub conditions: &'a [DesignCondition],
}

/// Wind speed on x, Hs on y, data as grey dots, one colored path set per layer.
pub fn render(title: &str, dataset: &Dataset, layers: &[PlotLayer<'_>]) -> String {
    let mut max_v = dataset.v_values().into_iter().fold(0.0, f64::max);
    let mut max_hs = dataset.hs_values().into_iter().fold(0.0, f64::max);
    for l in layers {
        for p in l.contour.vertices() {
            max_v = max_v.max(p.v);
            max_hs = max_hs.max(p.hs);
        }
    }
    let (max_v, max_hs) = (nice_ceiling(max_v), nice_ceiling(max_hs));
    let x = |v: f64| MARGIN + v / max_v * (WIDTH - 2.0 * MARGIN);
    let y = |h: f64| HEIGHT - MARGIN - h / max_hs * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let (x0, y0, x1, y1) = (x(0.0), y(0.0), x(max_v), y(max_hs));
    let _ = writeln!(s, r#"<path d="M{x0:.2},{y1:.2}V{y0:.2}H{x1:.2}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"#, x(f * max_v), y0 + 16.0, f * max_v);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"#, x0 - 6.0, y(f * max_hs) + 4.0, f * max_hs);
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">wind speed (m/s)</text>"#, WIDTH / 2.0, HEIGHT - 10.0);
    let _ = writeln!(s, r#"<text x="14" y="{:.2}" font-size="12" transform="rotate(-90 14 {:.2})" text-anchor="middle">Hs (m)</text>"#, HEIGHT / 2.0, HEIGHT / 2.0);

    let stride = dataset.len().div_ceil(MAX_POINTS).max(1);
    let _ = writeln!(s, r##"<g fill="#888" fill-opacity="0.5">"##);
    for p in dataset.samples().iter().step_by(stride) {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1"/>"#, x(p.v), y(p.hs));
    }
    s.push_str("</g>\n");

    for (k, layer) in layers.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut d = String::new();
        for lp in &layer.contour.loops {
            for (i, p) in lp.vertices().iter().enumerate() {
                let _ = write!(d, "{}{:.2},{:.2}", if i == 0 { "M" } else { "L" }, x(p.v), y(p.hs));
            }
            d.push('Z');
        }
        let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#);
        for c in layer.conditions {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, x(c.v), y(c.hs));
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 80.0,
            MARGIN + 16.0 * k as f64,
            escape(layer.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn nice_ceiling(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(x.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&c| c >= x)
        .unwrap_or(10.0 * mag)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
