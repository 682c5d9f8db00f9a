//! Result files. CSV outputs start with `# key: value` comment lines naming
//! the tool version and configuration hash; numbers use the shortest
//! decimal form that reads back to the same `f64`.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{DensityGrid, DesignCondition};
use crate::hdc::HdcResult;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance lines common to every output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
}

impl Metadata {
    pub fn new(config_hash: impl Into<String>) -> Self {
        Metadata {
            tool: "envcontour".into(),
            version: TOOL_VERSION.into(),
            config_hash: config_hash.into(),
        }
    }

    fn header(&self, extra: &[(&str, String)]) -> String {
        let mut s = format!(
            "# tool: {} {}\n# config_hash: {}\n",
            self.tool, self.version, self.config_hash
        );
        for (k, v) in extra {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s
    }
}

/// Shortest decimal that parses back to `x`, in plain notation for
/// moderate magnitudes and exponent notation otherwise.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn contour_csv(meta: &Metadata, method: &str, years: f64, result: &HdcResult) -> String {
    let mut s = meta.header(&[
        ("method", method.to_string()),
        ("return_period_years", fmt_num(years)),
        ("alpha", fmt_num(result.alpha.value())),
        ("f_m", fmt_num(result.threshold)),
        ("enclosed_mass", fmt_num(result.enclosed_mass)),
        ("cell_mass", fmt_num(result.cell_mass)),
        ("coverage_warning", result.coverage_warning.to_string()),
        ("touches_boundary", result.contour.touches_boundary().to_string()),
    ]);
    s.push_str("loop_id,vertex_id,hs_m,v_ms\n");
    for (l, lp) in result.contour.loops.iter().enumerate() {
        for (k, p) in lp.vertices().iter().enumerate() {
            let _ = writeln!(s, "{l},{k},{},{}", fmt_num(p.hs), fmt_num(p.v));
        }
    }
    s
}

pub fn design_csv(meta: &Metadata, method: &str, years: f64, rows: &[DesignCondition]) -> String {
    let mut s = meta.header(&[
        ("method", method.to_string()),
        ("return_period_years", fmt_num(years)),
    ]);
    s.push_str("label,hs_m,v_ms\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{}", r.label, fmt_num(r.hs), fmt_num(r.v));
    }
    s
}

pub fn density_csv(meta: &Metadata, method: &str, grid: &DensityGrid) -> String {
    let mut s = meta.header(&[
        ("method", method.to_string()),
        ("cell_area", fmt_num(grid.cell_area())),
        ("total_mass", fmt_num(grid.total_mass())),
    ]);
    s.push_str("i,j,hs_m,v_ms,f\n");
    let (ha, va) = (grid.hs_axis(), grid.v_axis());
    for i in 0..ha.count() {
        let h = fmt_num(ha.coord(i));
        for j in 0..va.count() {
            let _ = writeln!(s, "{i},{j},{h},{},{}", fmt_num(va.coord(j)), fmt_num(grid.get(i, j)));
        }
    }
    s
}

/// Pretty JSON with a trailing newline.
pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

/// File-name form of a return period: `50` for whole years, else the
/// shortest decimal with `.` replaced by `p` (`0.5` → `0p5`).
pub fn period_tag(years: f64) -> String {
    fmt_num(years).replace('.', "p")
}
