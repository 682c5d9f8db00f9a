//! Conditional modeling approach: `f(h, v) = f_Hs(h) * f_V|Hs(v | h)`.
//!
//! Hs follows a three-parameter Weibull distribution. Given Hs = h, the wind
//! speed follows a two-parameter Weibull distribution whose scale and shape
//! are power laws in h, `c1 + c2 * h^c3`. The dependence coefficients are
//! fitted by weighted least squares to per-bin Weibull fits of the wind
//! speeds within Hs bins.

mod lsq;
mod weibull;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use weibull::{fit_weibull2, fit_weibull3, weibull_pdf, Weibull2Fit, Weibull3, Weibull3Fit};

use crate::error::{Error, Result};
use crate::grid::{Dataset, DensityGrid, GridAxis};

/// Wind speeds at or below this value (m/s) are raised to it before the
/// per-bin Weibull fits, which need strictly positive data.
pub const MIN_WIND_SPEED: f64 = 1e-3;

/// Power-law dependence `h ↦ c1 + c2 * h^c3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependenceFn {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl DependenceFn {
    pub fn new(c1: f64, c2: f64, c3: f64) -> Self {
        DependenceFn { c1, c2, c3 }
    }

    pub fn eval(&self, h: f64) -> f64 {
        self.c1 + self.c2 * h.powf(self.c3)
    }

    /// Whether the function is strictly positive at sampled points of `[lo, hi]`
    /// (including both ends).
    pub fn positive_on(&self, lo: f64, hi: f64) -> bool {
        (0..=256).all(|i| {
            let h = lo + (hi - lo) * i as f64 / 256.0;
            let y = self.eval(h);
            y.is_finite() && y > 0.0
        })
    }
}

/// Per-bin conditional fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinFit {
    pub lower: f64,
    pub upper: f64,
    pub center: f64,
    pub count: usize,
    pub scale: f64,
    pub shape: f64,
    pub scale_residual: f64,
    pub shape_residual: f64,
}

/// Audit trail of a conditional fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub bin_width: f64,
    pub min_bin_count: usize,
    pub marginal_log_likelihood: f64,
    pub bins: Vec<BinFit>,
    /// Bins with too few samples, as `(lower edge, count)`.
    pub skipped_bins: Vec<(f64, usize)>,
    pub scale_fit_iterations: usize,
    pub shape_fit_iterations: usize,
    pub scale_fit_weighted_sse: f64,
    pub shape_fit_weighted_sse: f64,
}

/// Joint Hs–V model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CmaModel {
    pub hs_marginal: Weibull3,
    pub v_scale: DependenceFn,
    pub v_shape: DependenceFn,
    pub fit_report: Option<FitReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmaOptions {
    /// Hs bin width in meters.
    pub bin_width: f64,
    /// Bins with fewer samples are left out of the dependence fit.
    pub min_bin_count: usize,
    /// Hs value each bin's Weibull parameters are attributed to.
    #[serde(default)]
    pub abscissa: Abscissa,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Abscissa {
    /// Midpoint of the bin.
    Center,
    /// Mean Hs of the samples in the bin.
    #[default]
    Mean,
}

impl Default for CmaOptions {
    fn default() -> Self {
        CmaOptions {
            bin_width: 0.5,
            min_bin_count: 100,
            abscissa: Abscissa::default(),
        }
    }
}

impl CmaModel {
    /// Model from known parameters, checked for positive dependence functions
    /// on `[location, hs_max]`.
    pub fn new(hs_marginal: Weibull3, v_scale: DependenceFn, v_shape: DependenceFn, hs_max: f64) -> Result<Self> {
        let model = CmaModel {
            hs_marginal,
            v_scale,
            v_shape,
            fit_report: None,
        };
        model.check_domain(hs_marginal.location, hs_max)?;
        Ok(model)
    }

    fn check_domain(&self, lo: f64, hi: f64) -> Result<()> {
        for (name, f) in [("scale", &self.v_scale), ("shape", &self.v_shape)] {
            if !f.positive_on(lo, hi) {
                return Err(Error::EvaluationDomain(format!(
                    "wind speed {name} dependence {f:?} is not positive on [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Conditional wind-speed density at `v` given `h`.
    pub fn conditional_pdf(&self, v: f64, h: f64) -> f64 {
        weibull_pdf(v, self.v_scale.eval(h), self.v_shape.eval(h))
    }

    pub fn pdf(&self, h: f64, v: f64) -> f64 {
        let fh = self.hs_marginal.pdf(h);
        if fh == 0.0 {
            return 0.0;
        }
        fh * self.conditional_pdf(v, h)
    }

    /// Draws `n` samples, Hs first and then V given Hs, by inversion.
    pub fn sample(&self, rng: &mut impl Rng, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|_| {
                let h = self.hs_marginal.quantile(rng.random::<f64>());
                let (scale, shape) = (self.v_scale.eval(h), self.v_shape.eval(h));
                let u: f64 = rng.random();
                let v = scale * (-(-u).ln_1p()).powf(1.0 / shape);
                (h, v)
            })
            .collect()
    }

    /// Axes covering the model's effective support: Hs up to its
    /// `1 - 1e-10` quantile, V up to the largest conditional `1 - 1e-10`
    /// quantile over that Hs range. Both extended to cover `dataset` when given.
    pub fn axes(&self, step_hs: f64, step_v: f64, dataset: Option<&Dataset>) -> Result<(GridAxis, GridAxis)> {
        const Q: f64 = 1.0 - 1e-10;
        let mut hs_hi = self.hs_marginal.quantile(Q);
        let mut v_hi: f64 = 0.0;
        if let Some(d) = dataset {
            hs_hi = d.hs_values().into_iter().fold(hs_hi, f64::max);
            v_hi = d.v_values().into_iter().fold(v_hi, f64::max);
        }
        self.check_domain(self.hs_marginal.location, hs_hi)?;
        for i in 0..=200 {
            let h = self.hs_marginal.location + (hs_hi - self.hs_marginal.location) * i as f64 / 200.0;
            let q = self.v_scale.eval(h) * (-(-Q).ln_1p()).powf(1.0 / self.v_shape.eval(h));
            v_hi = v_hi.max(q);
        }
        Ok((
            GridAxis::covering(0.0, hs_hi, step_hs)?,
            GridAxis::covering(0.0, v_hi, step_v)?,
        ))
    }

    /// Joint density at every cell center.
    pub fn evaluate(&self, hs_axis: &GridAxis, v_axis: &GridAxis) -> Result<DensityGrid> {
        evaluate_cma(self, hs_axis, v_axis)
    }
}

/// Fits the marginal and conditional parts to a dataset.
pub fn fit_conditional(dataset: &Dataset, opts: &CmaOptions) -> Result<CmaModel> {
    if !(opts.bin_width.is_finite() && opts.bin_width > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bin width must be positive, got {}",
            opts.bin_width
        )));
    }
    let hs = dataset.hs_values();
    let marginal = fit_weibull3(&hs)?;

    let mut bins: std::collections::BTreeMap<i64, (f64, Vec<f64>)> = Default::default();
    for s in dataset.samples() {
        let idx = (s.hs / opts.bin_width).floor() as i64;
        let bin = bins.entry(idx).or_default();
        bin.0 += s.hs;
        bin.1.push(s.v.max(MIN_WIND_SPEED));
    }
    let (qualifying, skipped): (Vec<_>, Vec<_>) = bins
        .into_iter()
        .partition(|(_, (_, vs))| vs.len() >= opts.min_bin_count);
    let skipped_bins = skipped
        .iter()
        .map(|(idx, (_, vs))| (*idx as f64 * opts.bin_width, vs.len()))
        .collect();
    if qualifying.len() < 3 {
        return Err(Error::FitFailure(format!(
            "only {} Hs bin(s) hold at least {} samples; need 3",
            qualifying.len(),
            opts.min_bin_count
        )));
    }

    let per_bin: Vec<(i64, usize, Weibull2Fit)> = qualifying
        .par_iter()
        .map(|(idx, (_, vs))| fit_weibull2(vs).map(|f| (*idx, vs.len(), f)))
        .collect::<Result<_>>()?;

    let centers: Vec<f64> = qualifying
        .iter()
        .map(|(idx, (sum, vs))| match opts.abscissa {
            Abscissa::Center => (*idx as f64 + 0.5) * opts.bin_width,
            Abscissa::Mean => sum / vs.len() as f64,
        })
        .collect();
    let weights: Vec<f64> = per_bin.iter().map(|(_, c, _)| *c as f64).collect();
    let scales: Vec<f64> = per_bin.iter().map(|(_, _, f)| f.scale).collect();
    let shapes: Vec<f64> = per_bin.iter().map(|(_, _, f)| f.shape).collect();
    let scale_fit = lsq::fit_power_law(&centers, &scales, &weights)?;
    let shape_fit = lsq::fit_power_law(&centers, &shapes, &weights)?;

    let bins = per_bin
        .iter()
        .zip(&centers)
        .map(|((idx, count, f), &center)| BinFit {
            lower: *idx as f64 * opts.bin_width,
            upper: (*idx + 1) as f64 * opts.bin_width,
            center,
            count: *count,
            scale: f.scale,
            shape: f.shape,
            scale_residual: f.scale - scale_fit.function.eval(center),
            shape_residual: f.shape - shape_fit.function.eval(center),
        })
        .collect();

    let model = CmaModel {
        hs_marginal: marginal.dist,
        v_scale: scale_fit.function,
        v_shape: shape_fit.function,
        fit_report: Some(FitReport {
            bin_width: opts.bin_width,
            min_bin_count: opts.min_bin_count,
            marginal_log_likelihood: marginal.log_likelihood,
            bins,
            skipped_bins,
            scale_fit_iterations: scale_fit.iterations,
            shape_fit_iterations: shape_fit.iterations,
            scale_fit_weighted_sse: scale_fit.weighted_sse,
            shape_fit_weighted_sse: shape_fit.weighted_sse,
        }),
    };
    let hs_max = hs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    model
        .check_domain(marginal.dist.location, hs_max)
        .map_err(|e| Error::FitFailure(format!("fitted dependence is invalid: {e}")))?;
    Ok(model)
}

/// `f(h_i, v_j) = f_Hs(h_i) * f_V|Hs(v_j | h_i)` at every cell center.
pub fn evaluate_cma(model: &CmaModel, hs_axis: &GridAxis, v_axis: &GridAxis) -> Result<DensityGrid> {
    let nv = v_axis.count();
    let rows: Vec<Vec<f64>> = (0..hs_axis.count())
        .into_par_iter()
        .map(|i| {
            let h = hs_axis.coord(i);
            let fh = model.hs_marginal.pdf(h);
            if fh == 0.0 {
                return Ok(vec![0.0; nv]);
            }
            let (scale, shape) = (model.v_scale.eval(h), model.v_shape.eval(h));
            if !(scale.is_finite() && scale > 0.0 && shape.is_finite() && shape > 0.0) {
                return Err(Error::EvaluationDomain(format!(
                    "at hs = {h}: wind speed scale {scale}, shape {shape}"
                )));
            }
            let row: Vec<f64> = v_axis.coords().map(|v| fh * weibull_pdf(v, scale, shape)).collect();
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::EvaluationDomain(format!(
                    "density is unbounded at v = 0 for hs = {h} (shape {shape} < 1)"
                )));
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    DensityGrid::new(*hs_axis, *v_axis, rows.concat())
}
