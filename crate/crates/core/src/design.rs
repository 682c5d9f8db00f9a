//! Extreme environmental design conditions along a contour.
//!
//! Rays leave the origin (the coordinate-wise data median) at normalized
//! polar angles between 0° (pure Hs direction) and 90° (pure wind-speed
//! direction). Axes are normalized so that one unit spans the contour's
//! extent from the origin, which makes 45° bisect the contour's first
//! quadrant whatever the physical units. Each ray yields the farthest
//! contour crossing; the Hs and wind-speed maxima of the contour complete the
//! table.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ConditionLabel, Contour, Dataset, DesignCondition, Point};
use crate::kde::sample_std;

/// Angles of the standard table, in degrees.
pub const DEFAULT_ANGLES: [f64; 7] = [0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0];

/// How the axes are scaled before angles are measured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Contour maximum minus origin, per axis.
    #[default]
    ContourExtent,
    /// Sample standard deviation of the data, per axis.
    StandardDeviation,
}

/// Polar frame centered on the data median.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarFrame {
    pub origin: Point,
    pub scale_hs: f64,
    pub scale_v: f64,
}

impl PolarFrame {
    fn to_normalized(self, p: Point) -> (f64, f64) {
        (
            (p.hs - self.origin.hs) / self.scale_hs,
            (p.v - self.origin.v) / self.scale_v,
        )
    }
}

/// Frame with extent normalization.
pub fn build_frame(dataset: &Dataset, contour: &Contour) -> Result<PolarFrame> {
    build_frame_with(dataset, contour, Normalization::ContourExtent)
}

pub fn build_frame_with(
    dataset: &Dataset,
    contour: &Contour,
    normalization: Normalization,
) -> Result<PolarFrame> {
    let (hs, v) = dataset.medians();
    let origin = Point::new(hs, v);
    if contour.is_empty() {
        return Err(Error::Frame("contour has no loops".into()));
    }
    if !contour.encloses(origin) {
        return Err(Error::Frame(format!(
            "data median ({hs}, {v}) lies outside the contour"
        )));
    }
    let (scale_hs, scale_v) = match normalization {
        Normalization::ContourExtent => {
            let max_hs = contour.vertices().map(|p| p.hs).fold(f64::NEG_INFINITY, f64::max);
            let max_v = contour.vertices().map(|p| p.v).fold(f64::NEG_INFINITY, f64::max);
            (max_hs - hs, max_v - v)
        }
        Normalization::StandardDeviation => {
            (sample_std(&dataset.hs_values()), sample_std(&dataset.v_values()))
        }
    };
    if !(scale_hs > 0.0 && scale_v > 0.0) {
        return Err(Error::Frame(format!(
            "non-positive axis scales ({scale_hs}, {scale_v})"
        )));
    }
    Ok(PolarFrame {
        origin,
        scale_hs,
        scale_v,
    })
}

/// Unit direction for an angle in degrees, exact on the axes.
fn direction(phi_deg: f64) -> (f64, f64) {
    if phi_deg == 0.0 {
        (1.0, 0.0)
    } else if phi_deg == 90.0 {
        (0.0, 1.0)
    } else {
        let r = phi_deg.to_radians();
        (r.cos(), r.sin())
    }
}

/// Farthest crossing of the ray at normalized angle `phi_deg` with any loop.
pub fn ray_intersection(frame: &PolarFrame, contour: &Contour, phi_deg: f64) -> Result<DesignCondition> {
    if !(0.0..=90.0).contains(&phi_deg) {
        return Err(Error::InvalidParameter(format!(
            "angle must lie in [0, 90] degrees, got {phi_deg}"
        )));
    }
    let (du, dw) = direction(phi_deg);
    let cross = |ax: f64, ay: f64, bx: f64, by: f64| ax * by - ay * bx;
    let mut farthest: Option<f64> = None;
    for l in &contour.loops {
        for (a, b) in l.segments() {
            // Fixed endpoint order makes the arithmetic independent of the
            // loop's orientation.
            let (a, b) = if (a.hs, a.v) <= (b.hs, b.v) { (a, b) } else { (b, a) };
            let (ax, ay) = frame.to_normalized(a);
            let (bx, by) = frame.to_normalized(b);
            let (ex, ey) = (bx - ax, by - ay);
            let denom = cross(du, dw, ex, ey);
            let hits: Vec<f64> = if denom.abs() > 1e-15 * (ex.abs() + ey.abs()) {
                let t = cross(ax, ay, ex, ey) / denom;
                let s = cross(ax, ay, du, dw) / denom;
                if (-1e-12..=1.0 + 1e-12).contains(&s) {
                    vec![t]
                } else {
                    vec![]
                }
            } else {
                // Parallel: only a collinear segment touches the ray, at its ends.
                [(ax, ay), (bx, by)]
                    .into_iter()
                    .filter(|&(x, y)| cross(du, dw, x, y).abs() <= 1e-12 * (x.abs() + y.abs()))
                    .map(|(x, y)| x * du + y * dw)
                    .collect()
            };
            for t in hits.into_iter().filter(|t| *t >= 0.0) {
                if farthest.is_none_or(|f| t > f) {
                    farthest = Some(t);
                }
            }
        }
    }
    let t = farthest.ok_or_else(|| {
        Error::Geometry(format!("ray at {phi_deg}° does not meet the contour"))
    })?;
    Ok(DesignCondition {
        label: ConditionLabel::Angle(phi_deg),
        hs: frame.origin.hs + t * du * frame.scale_hs,
        v: frame.origin.v + t * dw * frame.scale_v,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Hs,
    V,
}

type Coord = fn(&Point) -> f64;

/// Contour point with the largest Hs (or wind speed). A flat extremal run of
/// vertices yields its midpoint; among several runs, the one with the largest
/// partner coordinate wins.
pub fn max_along_contour(contour: &Contour, axis: Axis) -> Result<DesignCondition> {
    let (key, partner): (Coord, Coord) = match axis {
        Axis::Hs => (|p| p.hs, |p| p.v),
        Axis::V => (|p| p.v, |p| p.hs),
    };
    let best = contour.vertices().map(|p| key(&p)).fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return Err(Error::Geometry("contour has no vertices".into()));
    }

    let mut candidates = Vec::new();
    for l in &contour.loops {
        let ring = &l.vertices()[..l.vertices().len() - 1];
        let n = ring.len();
        let at_max: Vec<bool> = ring.iter().map(|p| key(p) == best).collect();
        if !at_max.iter().any(|&m| m) {
            continue;
        }
        if at_max.iter().all(|&m| m) {
            candidates.push(midpoint(ring[0], ring[n - 1]));
            continue;
        }
        // Walk runs starting right after a non-maximal vertex.
        let start = (0..n).find(|&i| !at_max[i]).unwrap();
        let mut i = 0;
        while i < n {
            let idx = (start + i) % n;
            if at_max[idx] {
                let first = ring[idx];
                let mut last = first;
                while i < n && at_max[(start + i) % n] {
                    last = ring[(start + i) % n];
                    i += 1;
                }
                candidates.push(midpoint(first, last));
            } else {
                i += 1;
            }
        }
    }
    let p = candidates
        .into_iter()
        .max_by(|a, b| partner(a).total_cmp(&partner(b)))
        .expect("a maximal vertex exists");
    Ok(DesignCondition {
        label: match axis {
            Axis::Hs => ConditionLabel::MaxHs,
            Axis::V => ConditionLabel::MaxV,
        },
        hs: p.hs,
        v: p.v,
    })
}

fn midpoint(a: Point, b: Point) -> Point {
    Point::new(0.5 * (a.hs + b.hs), 0.5 * (a.v + b.v))
}

/// The standard 9-row table: rays at 0, 15, …, 90 degrees, then max Hs and
/// max wind speed.
pub fn design_conditions(contour: &Contour, dataset: &Dataset) -> Result<Vec<DesignCondition>> {
    let frame = build_frame(dataset, contour)?;
    design_conditions_in_frame(&frame, contour, &DEFAULT_ANGLES)
}

/// Rays at `angles` in a given frame, followed by the two maxima rows.
pub fn design_conditions_in_frame(
    frame: &PolarFrame,
    contour: &Contour,
    angles: &[f64],
) -> Result<Vec<DesignCondition>> {
    let mut rows = angles
        .iter()
        .map(|&phi| ray_intersection(frame, contour, phi))
        .collect::<Result<Vec<_>>>()?;
    rows.push(max_along_contour(contour, Axis::Hs)?);
    rows.push(max_along_contour(contour, Axis::V)?);
    Ok(rows)
}
