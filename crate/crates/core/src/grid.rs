//! Domain types shared by every stage, plus grid arithmetic.
//!
//! Densities live at cell centers. The mass of a cell is its value times
//! `step_hs * step_v` (midpoint rule), so sums over the value array are the
//! only integration the crate ever needs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Snap distance, in units of one grid step, under which a fractional grid
/// index is treated as an exact node index.
const NODE_SNAP: f64 = 1e-9;

fn check_finite(what: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidValue(format!("{what} = {x}")))
    }
}

/// One sea state: significant wave height (m) and wind speed (m/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub hs: f64,
    pub v: f64,
    /// ISO 8601 timestamp, kept verbatim.
    pub t: Option<String>,
}

impl Sample {
    pub fn new(hs: f64, v: f64) -> Result<Self> {
        Self::with_time(hs, v, None)
    }

    pub fn with_time(hs: f64, v: f64, t: Option<String>) -> Result<Self> {
        check_finite("hs", hs)?;
        check_finite("v", v)?;
        if hs < 0.0 || v < 0.0 {
            return Err(Error::InvalidValue(format!(
                "negative sample (hs = {hs}, v = {v})"
            )));
        }
        Ok(Sample { hs, v, t })
    }
}

/// Ordered hindcast series.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    state_duration_hours: f64,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, state_duration_hours: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::DegenerateData(format!(
                "need at least 2 samples, got {}",
                samples.len()
            )));
        }
        check_finite("state_duration_hours", state_duration_hours)?;
        if state_duration_hours <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "state duration must be positive, got {state_duration_hours}"
            )));
        }
        Ok(Dataset {
            samples,
            state_duration_hours,
        })
    }

    /// Builds a dataset of one-hour states from `(hs, v)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let samples = pairs
            .iter()
            .map(|&(hs, v)| Sample::new(hs, v))
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(samples, 1.0)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn state_duration_hours(&self) -> f64 {
        self.state_duration_hours
    }

    pub fn hs_values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.hs).collect()
    }

    pub fn v_values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.v).collect()
    }

    /// Coordinate-wise medians `(median hs, median v)`.
    pub fn medians(&self) -> (f64, f64) {
        (median(&self.hs_values()), median(&self.v_values()))
    }
}

/// Median of a non-empty slice; the mean of the two central values for even
/// lengths.
pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Regular axis of cell-center coordinates `origin + i * step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    origin: f64,
    step: f64,
    count: usize,
}

impl GridAxis {
    pub fn new(origin: f64, step: f64, count: usize) -> Result<Self> {
        check_finite("axis origin", origin)?;
        check_finite("axis step", step)?;
        if step <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "axis step must be positive, got {step}"
            )));
        }
        if count < 2 {
            return Err(Error::InvalidParameter(format!(
                "axis needs at least 2 cells, got {count}"
            )));
        }
        Ok(GridAxis {
            origin,
            step,
            count,
        })
    }

    /// Axis on multiples of `step` spanning `[lo, hi]`, with `lo` rounded down
    /// and `hi` rounded up to the step.
    pub fn covering(lo: f64, hi: f64, step: f64) -> Result<Self> {
        check_finite("axis lower bound", lo)?;
        check_finite("axis upper bound", hi)?;
        if step <= 0.0 || !step.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "axis step must be positive, got {step}"
            )));
        }
        // Tolerate representation error when a bound already sits on a multiple.
        let first = (lo / step + NODE_SNAP).floor() as i64;
        let last = (hi / step - NODE_SNAP).ceil() as i64;
        let count = (last - first + 1).max(2) as usize;
        GridAxis::new(first as f64 * step, step, count)
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.step
    }

    /// Highest cell-center coordinate.
    pub fn last(&self) -> f64 {
        self.coord(self.count - 1)
    }

    pub fn coords(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.coord(i))
    }

    /// Lower node index and fraction in `[0, 1]` of `x`, or `None` when `x`
    /// lies outside the axis.
    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let mut pos = (x - self.origin) / self.step;
        let nearest = pos.round();
        if (pos - nearest).abs() < NODE_SNAP {
            pos = nearest;
        }
        if !(0.0..=(self.count - 1) as f64).contains(&pos) {
            return None;
        }
        let lower = (pos.floor() as usize).min(self.count - 2);
        Some((lower, pos - lower as f64))
    }
}

/// Nonnegative density field sampled at cell centers, hs-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    hs_axis: GridAxis,
    v_axis: GridAxis,
    values: Vec<f64>,
}

impl DensityGrid {
    /// `values[i * v_axis.count() + j]` is the density at
    /// `(hs_axis.coord(i), v_axis.coord(j))`.
    pub fn new(hs_axis: GridAxis, v_axis: GridAxis, values: Vec<f64>) -> Result<Self> {
        let expected = hs_axis.count() * v_axis.count();
        if values.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "grid needs {expected} values, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidValue(format!("density value {bad}")));
        }
        Ok(DensityGrid {
            hs_axis,
            v_axis,
            values,
        })
    }

    /// Grid filled by evaluating `f(hs, v)` at every cell center.
    pub fn from_fn(hs_axis: GridAxis, v_axis: GridAxis, mut f: impl FnMut(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(hs_axis.count() * v_axis.count());
        for hs in hs_axis.coords() {
            for v in v_axis.coords() {
                values.push(f(hs, v));
            }
        }
        DensityGrid::new(hs_axis, v_axis, values)
    }

    pub fn hs_axis(&self) -> &GridAxis {
        &self.hs_axis
    }

    pub fn v_axis(&self) -> &GridAxis {
        &self.v_axis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.v_axis.count() + j]
    }

    pub fn cell_area(&self) -> f64 {
        self.hs_axis.step() * self.v_axis.step()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Sum of cell masses, `Σ value * step_hs * step_v`.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    /// Copy with every value multiplied by `factor ≥ 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        DensityGrid::new(
            self.hs_axis,
            self.v_axis,
            self.values.iter().map(|x| x * factor).collect(),
        )
    }

    pub fn contains(&self, hs: f64, v: f64) -> bool {
        self.hs_axis.locate(hs).is_some() && self.v_axis.locate(v).is_some()
    }

    /// Bilinear interpolation between the four surrounding cell centers.
    pub fn interpolate(&self, hs: f64, v: f64) -> Result<f64> {
        let out = || Error::OutOfGrid { hs, v };
        let (i, s) = self.hs_axis.locate(hs).ok_or_else(out)?;
        let (j, t) = self.v_axis.locate(v).ok_or_else(out)?;
        let f00 = self.get(i, j);
        let f10 = self.get(i + 1, j);
        let f01 = self.get(i, j + 1);
        let f11 = self.get(i + 1, j + 1);
        Ok((1.0 - s) * ((1.0 - t) * f00 + t * f01) + s * ((1.0 - t) * f10 + t * f11))
    }

    /// Range `(min, max)` of the four cell centers surrounding a point.
    pub fn local_range(&self, hs: f64, v: f64) -> Result<(f64, f64)> {
        let out = || Error::OutOfGrid { hs, v };
        let (i, _) = self.hs_axis.locate(hs).ok_or_else(out)?;
        let (j, _) = self.v_axis.locate(v).ok_or_else(out)?;
        let corners = [
            self.get(i, j),
            self.get(i + 1, j),
            self.get(i, j + 1),
            self.get(i + 1, j + 1),
        ];
        let lo = corners.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok((lo, hi))
    }
}

/// Per-state probability of falling outside the design region.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExceedanceProbability(f64);

impl ExceedanceProbability {
    pub fn new(alpha: f64) -> Result<Self> {
        check_finite("alpha", alpha)?;
        if alpha <= 0.0 || alpha >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "exceedance probability must lie in (0, 1), got {alpha}"
            )));
        }
        Ok(ExceedanceProbability(alpha))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Return period in years.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReturnPeriodSpec {
    years: f64,
}

impl ReturnPeriodSpec {
    pub fn new(years: f64) -> Result<Self> {
        check_finite("return period", years)?;
        if years <= 0.0 {
            return Err(Error::InvalidReturnPeriod(format!(
                "return period must be positive, got {years}"
            )));
        }
        Ok(ReturnPeriodSpec { years })
    }

    pub fn years(&self) -> f64 {
        self.years
    }
}

/// A point in (hs, v) space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub hs: f64,
    pub v: f64,
}

impl Point {
    pub fn new(hs: f64, v: f64) -> Self {
        Point { hs, v }
    }
}

/// Closed polyline. The first vertex is repeated as the last one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourLoop {
    vertices: Vec<Point>,
    touches_boundary: bool,
}

impl ContourLoop {
    /// Builds a loop from an open or already-closed vertex ring.
    pub fn new(mut vertices: Vec<Point>, touches_boundary: bool) -> Result<Self> {
        if vertices.iter().any(|p| !p.hs.is_finite() || !p.v.is_finite()) {
            return Err(Error::InvalidValue("non-finite contour vertex".into()));
        }
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::Geometry(format!(
                "a loop needs at least 3 distinct vertices, got {}",
                vertices.len()
            )));
        }
        vertices.push(vertices[0]);
        Ok(ContourLoop {
            vertices,
            touches_boundary,
        })
    }

    /// Vertices including the closing repeat of the first one.
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Whether part of the loop runs along the grid boundary.
    pub fn touches_boundary(&self) -> bool {
        self.touches_boundary
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    /// Signed shoelace area; positive for counter-clockwise loops.
    pub fn signed_area(&self) -> f64 {
        0.5 * self
            .segments()
            .map(|(a, b)| a.hs * b.v - b.hs * a.v)
            .sum::<f64>()
    }

    /// Even-odd point-in-polygon test.
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.segments() {
            if (a.v > p.v) != (b.v > p.v) {
                let x = a.hs + (p.v - a.v) / (b.v - a.v) * (b.hs - a.hs);
                if p.hs < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

/// Level set `{f = threshold}` of a density grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contour {
    pub threshold: f64,
    pub alpha: ExceedanceProbability,
    pub loops: Vec<ContourLoop>,
}

impl Contour {
    pub fn new(threshold: f64, alpha: ExceedanceProbability, loops: Vec<ContourLoop>) -> Result<Self> {
        check_finite("contour threshold", threshold)?;
        if threshold < 0.0 {
            return Err(Error::InvalidValue(format!(
                "contour threshold must be nonnegative, got {threshold}"
            )));
        }
        Ok(Contour {
            threshold,
            alpha,
            loops,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.loops.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Point> + '_ {
        self.loops.iter().flat_map(|l| l.vertices().iter().copied())
    }

    pub fn touches_boundary(&self) -> bool {
        self.loops.iter().any(ContourLoop::touches_boundary)
    }

    /// Even-odd containment over all loops.
    pub fn encloses(&self, p: Point) -> bool {
        self.loops.iter().filter(|l| l.contains(p)).count() % 2 == 1
    }

    /// Distance from `p` to the nearest contour segment.
    pub fn distance_to(&self, p: Point) -> f64 {
        self.loops
            .iter()
            .flat_map(ContourLoop::segments)
            .map(|(a, b)| segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.hs - a.hs, b.v - a.v);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.hs - a.hs) * dx + (p.v - a.v) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a.hs + t * dx, a.v + t * dy);
    ((p.hs - qx).powi(2) + (p.v - qy).powi(2)).sqrt()
}

/// Row label of a design condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ConditionLabel {
    /// Normalized polar angle in degrees.
    Angle(f64),
    MaxHs,
    MaxV,
}

impl std::fmt::Display for ConditionLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConditionLabel::Angle(deg) => write!(f, "{deg}"),
            ConditionLabel::MaxHs => f.write_str("max_hs"),
            ConditionLabel::MaxV => f.write_str("max_v"),
        }
    }
}

/// Labeled `(hs, v)` pair selected on a contour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignCondition {
    pub label: ConditionLabel,
    pub hs: f64,
    pub v: f64,
}

impl DesignCondition {
    pub fn point(&self) -> Point {
        Point::new(self.hs, self.v)
    }
}
