//! Highest density contours.
//!
//! The design region for exceedance probability α is the density superlevel
//! set `{f ≥ f_m}` holding probability `1 - α`. On a grid, `f_m` comes from
//! the sorted prefix sum of cell masses; the contour is the marching-squares
//! isoline at that level.

mod isolines;

use rayon::prelude::*;
use serde::Serialize;

pub use isolines::extract_isolines;

use crate::error::{Error, Result};
use crate::grid::{Contour, Dataset, DensityGrid, ExceedanceProbability, ReturnPeriodSpec};

pub const HOURS_PER_YEAR: f64 = 365.25 * 24.0;

/// `α = state_duration / (years * 365.25 * 24 h)`.
pub fn alpha_from_return_period(
    spec: ReturnPeriodSpec,
    state_duration_hours: f64,
) -> Result<ExceedanceProbability> {
    if !(state_duration_hours.is_finite() && state_duration_hours > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "state duration must be positive, got {state_duration_hours}"
        )));
    }
    let alpha = state_duration_hours / (spec.years() * HOURS_PER_YEAR);
    ExceedanceProbability::new(alpha).map_err(|_| {
        Error::InvalidReturnPeriod(format!(
            "{} y with {state_duration_hours} h states gives alpha = {alpha}",
            spec.years()
        ))
    })
}

/// Density level of a highest density region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub f_m: f64,
    /// Mass of `{f ≥ f_m}` as a fraction of the grid's total mass.
    pub enclosed_mass: f64,
    /// Set when every positive cell was needed to reach `1 - α`.
    pub coverage_warning: bool,
}

/// Smallest density level whose superlevel set holds `1 - α` of the grid
/// mass. Cells tied at the level are all included.
pub fn find_threshold(grid: &DensityGrid, alpha: ExceedanceProbability) -> Result<Threshold> {
    let total = grid.total_mass();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("grid has zero mass".into()));
    }
    if (total - 1.0).abs() > 1e-2 {
        log::warn!("grid mass {total} is not within 1e-2 of 1; threshold uses the actual mass");
    }
    let mut sorted = grid.values().to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));

    let area = grid.cell_area();
    let target = (1.0 - alpha.value()) * total;
    let mut cum = 0.0;
    let mut k = 0;
    while k < sorted.len() {
        cum += sorted[k] * area;
        k += 1;
        if cum >= target {
            break;
        }
    }
    let mut f_m = sorted[k - 1];
    while k < sorted.len() && sorted[k] == f_m {
        cum += sorted[k] * area;
        k += 1;
    }
    let min_positive = sorted.iter().rev().copied().find(|&x| x > 0.0).unwrap_or(0.0);
    let coverage_warning = f_m <= min_positive;
    if coverage_warning {
        f_m = min_positive;
        cum = total;
        log::warn!(
            "alpha = {} needs every positive cell; using the smallest positive density",
            alpha.value()
        );
    }
    Ok(Threshold {
        f_m,
        enclosed_mass: cum / total,
        coverage_warning,
    })
}

/// A highest density contour and its bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HdcResult {
    pub contour: Contour,
    pub enclosed_mass: f64,
    pub threshold: f64,
    pub alpha: ExceedanceProbability,
    /// Normalized mass of one cell at the threshold density.
    pub cell_mass: f64,
    pub coverage_warning: bool,
}

/// Contour at a given exceedance probability.
pub fn contour_for_alpha(grid: &DensityGrid, alpha: ExceedanceProbability) -> Result<HdcResult> {
    let t = find_threshold(grid, alpha)?;
    let loops = extract_isolines(grid, t.f_m);
    Ok(HdcResult {
        contour: Contour::new(t.f_m, alpha, loops)?,
        enclosed_mass: t.enclosed_mass,
        threshold: t.f_m,
        alpha,
        cell_mass: t.f_m * grid.cell_area() / grid.total_mass(),
        coverage_warning: t.coverage_warning,
    })
}

/// Contour for a return period.
pub fn compute_contour(
    grid: &DensityGrid,
    spec: ReturnPeriodSpec,
    state_duration_hours: f64,
) -> Result<HdcResult> {
    contour_for_alpha(grid, alpha_from_return_period(spec, state_duration_hours)?)
}

/// Whether a point lies in the superlevel set `{f ≥ f_m}`. Points off the grid
/// have density zero.
pub fn is_inside(grid: &DensityGrid, f_m: f64, hs: f64, v: f64) -> bool {
    match grid.interpolate(hs, v) {
        Ok(f) => f >= f_m,
        Err(_) => f_m <= 0.0,
    }
}

/// Number of samples whose interpolated density is below `f_m`. Samples off
/// the grid count as exceedances.
pub fn count_exceedances(dataset: &Dataset, grid: &DensityGrid, f_m: f64) -> usize {
    let off_grid = dataset
        .samples()
        .par_iter()
        .filter(|s| !grid.contains(s.hs, s.v))
        .count();
    if off_grid > 0 {
        log::warn!("{off_grid} sample(s) lie outside the density grid");
    }
    dataset
        .samples()
        .par_iter()
        .filter(|s| !is_inside(grid, f_m, s.hs, s.v))
        .count()
}
