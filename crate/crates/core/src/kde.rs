//! Constant-bandwidth bivariate Gaussian kernel density estimation.
//!
//! Each axis gets its own bandwidth `b = factor * σ * n^exponent`, with the
//! defaults `factor = 2` and `exponent = -1/6` (twice Silverman's rule of
//! thumb in two dimensions). The kernel is the product of two univariate
//! normal densities, so grid evaluation factorizes into two tables of 1-D
//! kernel columns combined by an outer-product accumulation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Dataset, DensityGrid, GridAxis};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Samples per accumulation block. Blocks are summed in index order, which
/// keeps the result independent of the rayon pool size.
const BLOCK_TARGET: usize = 256;
const MAX_BLOCKS: usize = 64;

/// Bandwidth rule `b = factor * σ * n^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthRule {
    pub factor: f64,
    pub exponent: f64,
}

impl Default for BandwidthRule {
    fn default() -> Self {
        BandwidthRule {
            factor: 2.0,
            exponent: -1.0 / 6.0,
        }
    }
}

impl BandwidthRule {
    pub fn bandwidth(&self, sigma: f64, n: usize) -> Result<f64> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "standard deviation must be positive, got {sigma}"
            )));
        }
        if n < 1 {
            return Err(Error::InvalidParameter("sample count must be at least 1".into()));
        }
        if !(self.factor.is_finite() && self.factor > 0.0) || !self.exponent.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "invalid bandwidth rule {self:?}"
            )));
        }
        Ok(self.factor * sigma * (n as f64).powf(self.exponent))
    }
}

/// Twice Silverman's two-dimensional rule of thumb, `2 σ n^(-1/6)`.
pub fn silverman_bandwidth(sigma: f64, n: usize) -> Result<f64> {
    BandwidthRule::default().bandwidth(sigma, n)
}

/// Sample standard deviation (denominator `n - 1`).
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|x| (x - mean).powi(2)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// Options controlling grid evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Zero the kernel beyond this many bandwidths. `None` evaluates every
    /// kernel exactly. A radius of 6 drops less than 1e-8 of each kernel's
    /// mass.
    pub truncation: Option<f64>,
    /// Bandwidths of padding the grid must provide beyond the data extremes.
    pub required_padding: f64,
    /// Treat insufficient padding as an error instead of a logged warning.
    pub strict_coverage: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            truncation: None,
            required_padding: 4.0,
            strict_coverage: false,
        }
    }
}

/// A fitted constant-bandwidth KDE.
#[derive(Debug, Clone)]
pub struct KdeModel<'a> {
    pub b_hs: f64,
    pub b_v: f64,
    pub sigma_hs: f64,
    pub sigma_v: f64,
    dataset: &'a Dataset,
}

/// Fits with the default rule, `b = 2 σ n^(-1/6)` per axis.
pub fn fit(dataset: &Dataset) -> Result<KdeModel<'_>> {
    fit_with(dataset, BandwidthRule::default())
}

pub fn fit_with(dataset: &Dataset, rule: BandwidthRule) -> Result<KdeModel<'_>> {
    let n = dataset.len();
    let sigma_hs = sample_std(&dataset.hs_values());
    let sigma_v = sample_std(&dataset.v_values());
    for (name, sigma) in [("hs", sigma_hs), ("v", sigma_v)] {
        if !(sigma > 0.0) {
            return Err(Error::DegenerateData(format!("{name} has zero variance")));
        }
    }
    Ok(KdeModel {
        b_hs: rule.bandwidth(sigma_hs, n)?,
        b_v: rule.bandwidth(sigma_v, n)?,
        sigma_hs,
        sigma_v,
        dataset,
    })
}

impl<'a> KdeModel<'a> {
    /// Model with explicit bandwidths.
    pub fn with_bandwidths(dataset: &'a Dataset, b_hs: f64, b_v: f64) -> Result<Self> {
        if !(b_hs > 0.0 && b_v > 0.0 && b_hs.is_finite() && b_v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bandwidths must be positive, got ({b_hs}, {b_v})"
            )));
        }
        Ok(KdeModel {
            b_hs,
            b_v,
            sigma_hs: sample_std(&dataset.hs_values()),
            sigma_v: sample_std(&dataset.v_values()),
            dataset,
        })
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.dataset
    }

    /// Density at a single point, straight from the definition.
    pub fn density_at(&self, hs: f64, v: f64) -> f64 {
        let sum: f64 = self
            .dataset
            .samples()
            .iter()
            .map(|s| kernel(hs - s.hs, self.b_hs, None) * kernel(v - s.v, self.b_v, None))
            .sum();
        sum / self.dataset.len() as f64
    }

    /// Axes with `step` spacing reaching `padding` bandwidths beyond the data,
    /// never below zero.
    pub fn axes(&self, step_hs: f64, step_v: f64, padding: f64) -> Result<(GridAxis, GridAxis)> {
        let (hs_lo, hs_hi) = extent(&self.dataset.hs_values());
        let (v_lo, v_hi) = extent(&self.dataset.v_values());
        let hs = GridAxis::covering(
            (hs_lo - padding * self.b_hs).max(0.0),
            hs_hi + padding * self.b_hs,
            step_hs,
        )?;
        let v = GridAxis::covering(
            (v_lo - padding * self.b_v).max(0.0),
            v_hi + padding * self.b_v,
            step_v,
        )?;
        Ok((hs, v))
    }

    /// Checks that both axes reach `padding` bandwidths past the data (or 0).
    pub fn check_coverage(&self, hs_axis: &GridAxis, v_axis: &GridAxis, padding: f64) -> Result<()> {
        let check = |name: &str, values: Vec<f64>, b: f64, axis: &GridAxis| {
            let (lo, hi) = extent(&values);
            let need_lo = (lo - padding * b).max(0.0);
            let need_hi = hi + padding * b;
            let slack = 0.5 * axis.step();
            if axis.origin() > need_lo + slack || axis.last() < need_hi - slack {
                return Err(Error::GridTooSmall(format!(
                    "{name} axis [{}, {}] does not cover [{need_lo}, {need_hi}] \
                     ({padding} bandwidths of padding)",
                    axis.origin(),
                    axis.last()
                )));
            }
            Ok(())
        };
        check("hs", self.dataset.hs_values(), self.b_hs, hs_axis)?;
        check("v", self.dataset.v_values(), self.b_v, v_axis)
    }

    /// Evaluates the density at every cell center.
    pub fn evaluate(&self, hs_axis: &GridAxis, v_axis: &GridAxis) -> Result<DensityGrid> {
        self.evaluate_with(hs_axis, v_axis, &EvalOptions::default())
    }

    pub fn evaluate_with(
        &self,
        hs_axis: &GridAxis,
        v_axis: &GridAxis,
        opts: &EvalOptions,
    ) -> Result<DensityGrid> {
        if let Err(e) = self.check_coverage(hs_axis, v_axis, opts.required_padding) {
            if opts.strict_coverage {
                return Err(e);
            }
            log::warn!("{e}");
        }
        let samples = self.dataset.samples();
        let (nh, nv) = (hs_axis.count(), v_axis.count());
        let blocks = samples.len().div_ceil(BLOCK_TARGET).clamp(1, MAX_BLOCKS);
        let block_len = samples.len().div_ceil(blocks);

        let partials: Vec<Vec<f64>> = samples
            .par_chunks(block_len)
            .map(|block| {
                let mut acc = vec![0.0; nh * nv];
                let mut kh = vec![0.0; nh];
                let mut kv = vec![0.0; nv];
                for s in block {
                    let hs_range = fill_column(&mut kh, hs_axis, s.hs, self.b_hs, opts.truncation);
                    let v_range = fill_column(&mut kv, v_axis, s.v, self.b_v, opts.truncation);
                    for i in hs_range {
                        let w = kh[i];
                        if w == 0.0 {
                            continue;
                        }
                        let row = &mut acc[i * nv + v_range.start..i * nv + v_range.end];
                        for (dst, k) in row.iter_mut().zip(&kv[v_range.clone()]) {
                            *dst += w * k;
                        }
                    }
                }
                acc
            })
            .collect();

        let mut values = vec![0.0; nh * nv];
        for partial in &partials {
            for (dst, src) in values.iter_mut().zip(partial) {
                *dst += src;
            }
        }
        let inv_n = 1.0 / samples.len() as f64;
        for x in &mut values {
            *x *= inv_n;
        }
        DensityGrid::new(*hs_axis, *v_axis, values)
    }
}

/// Default grid for a model: step 0.1 on both axes, 4 bandwidths of padding.
pub fn default_axes(model: &KdeModel<'_>) -> Result<(GridAxis, GridAxis)> {
    model.axes(0.1, 0.1, 4.0)
}

/// Gaussian kernel `φ(d / b) / b`, zero beyond `truncation` bandwidths.
fn kernel(d: f64, b: f64, truncation: Option<f64>) -> f64 {
    let z = d / b;
    match truncation {
        Some(r) if z.abs() > r => 0.0,
        _ => INV_SQRT_2PI * (-0.5 * z * z).exp() / b,
    }
}

/// Writes the kernel column for one sample and returns the index range that
/// may hold nonzero values.
fn fill_column(
    column: &mut [f64],
    axis: &GridAxis,
    center: f64,
    b: f64,
    truncation: Option<f64>,
) -> std::ops::Range<usize> {
    let range = match truncation {
        None => 0..column.len(),
        Some(r) => {
            let lo = ((center - r * b - axis.origin()) / axis.step()).floor().max(0.0) as usize;
            let hi = (((center + r * b - axis.origin()) / axis.step()).ceil() + 1.0)
                .clamp(0.0, column.len() as f64) as usize;
            lo.min(hi)..hi
        }
    };
    for i in range.clone() {
        column[i] = kernel(axis.coord(i) - center, b, truncation);
    }
    range
}

fn extent(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Sample;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    /// Direct definition, one sample and one cell at a time.
    fn brute_force(data: &Dataset, b_hs: f64, b_v: f64, ha: &GridAxis, va: &GridAxis) -> Vec<f64> {
        let n = data.len() as f64;
        let norm = 1.0 / (2.0 * std::f64::consts::PI * b_hs * b_v);
        let mut out = Vec::new();
        for x in ha.coords() {
            for y in va.coords() {
                let mut s = 0.0;
                for p in data.samples() {
                    let a = (x - p.hs) / b_hs;
                    let c = (y - p.v) / b_v;
                    s += norm * (-0.5 * a * a).exp() * (-0.5 * c * c).exp();
                }
                out.push(s / n);
            }
        }
        out
    }

    fn random_dataset(rng: &mut ChaCha8Rng, n: usize) -> Dataset {
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(0.2..4.0), rng.random_range(1.0..15.0)))
            .collect();
        Dataset::from_pairs(&pairs).unwrap()
    }

    #[test]
    fn bandwidth_examples() {
        assert_eq!(silverman_bandwidth(1.0, 1).unwrap(), 2.0);
        assert!((silverman_bandwidth(2.0, 64).unwrap() - 2.0).abs() < 1e-15);
        // 2 * 429528^(-1/6), 50-digit evaluation.
        assert!((silverman_bandwidth(1.0, 429_528).unwrap() - 0.230_249_174_788_343_2).abs() < 1e-15);
        assert!(silverman_bandwidth(0.0, 10).is_err());
        assert!(silverman_bandwidth(1.0, 0).is_err());
        assert!(silverman_bandwidth(f64::NAN, 10).is_err());
    }

    #[test]
    fn two_point_fit() {
        let d = Dataset::from_pairs(&[(0.0, 0.0), (2.0, 2.0)]).unwrap();
        let m = fit(&d).unwrap();
        let sigma = 2f64.sqrt();
        assert!((m.sigma_hs - sigma).abs() < 1e-15);
        let b = 2.0 * sigma * 2f64.powf(-1.0 / 6.0);
        assert!(rel_close(m.b_hs, b, 1e-14));
        assert!(rel_close(m.b_v, b, 1e-14));
        // 2√2·2^(-1/6) to 20 digits.
        assert!((m.b_hs - 2.519_842_099_789_746_3).abs() < 1e-14);
    }

    #[test]
    fn zero_variance_is_degenerate() {
        let d = Dataset::from_pairs(&[(1.0, 0.0), (1.0, 2.0), (1.0, 3.0)]).unwrap();
        assert!(matches!(fit(&d), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn standard_normal_bandwidths() {
        use rand_distr_free::standard_normal;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pairs: Vec<(f64, f64)> = (0..10_000)
            .map(|_| (standard_normal(&mut rng) + 10.0, standard_normal(&mut rng) + 10.0))
            .collect();
        let d = Dataset::from_pairs(&pairs).unwrap();
        let m = fit(&d).unwrap();
        let target = 2.0 * 10_000f64.powf(-1.0 / 6.0);
        assert!((target - 0.430_886_938_006_376_7).abs() < 1e-15);
        // σ̂ of 10⁴ normals is within ~3% of 1 with overwhelming probability.
        assert!(rel_close(m.b_hs, target, 0.03), "{}", m.b_hs);
        assert!(rel_close(m.b_v, target, 0.03), "{}", m.b_v);
        assert!(rel_close(m.b_hs / m.sigma_hs, target, 1e-14));
    }

    /// Box-Muller, kept local so the oracle does not share code with the
    /// synthetic-data generator.
    mod rand_distr_free {
        use rand::Rng;
        pub fn standard_normal(rng: &mut impl Rng) -> f64 {
            let u1: f64 = 1.0 - rng.random::<f64>();
            let u2: f64 = rng.random();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        }
    }

    #[test]
    fn single_sample_peak() {
        let d = Dataset::new(vec![Sample::new(2.0, 5.0).unwrap(); 2], 1.0).unwrap();
        let m = KdeModel::with_bandwidths(&d, 0.3, 0.7).unwrap();
        let ha = GridAxis::new(0.0, 0.1, 41).unwrap();
        let va = GridAxis::new(0.0, 0.1, 101).unwrap();
        let g = m.evaluate(&ha, &va).unwrap();
        let peak = 1.0 / (2.0 * std::f64::consts::PI * 0.3 * 0.7);
        assert!(rel_close(g.interpolate(2.0, 5.0).unwrap(), peak, 1e-12));
        assert!(rel_close(g.max_value(), peak, 1e-12));
    }

    #[test]
    fn single_sample_mass_six_bandwidths() {
        let d = Dataset::new(vec![Sample::new(3.0, 8.0).unwrap(); 2], 1.0).unwrap();
        let m = KdeModel::with_bandwidths(&d, 0.5, 1.0).unwrap();
        let (ha, va) = m.axes(0.1, 0.1, 6.0).unwrap();
        let g = m.evaluate(&ha, &va).unwrap();
        // Analytic mass inside ±6 bandwidths is erf(6/√2)² ≈ 1 - 4e-9.
        assert!((g.total_mass() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn mirrored_samples_give_symmetric_field() {
        let d = Dataset::from_pairs(&[(1.0, 4.0), (3.0, 6.0)]).unwrap();
        let m = KdeModel::with_bandwidths(&d, 0.4, 0.6).unwrap();
        // Grid symmetric about (2, 5).
        let ha = GridAxis::new(0.0, 0.1, 41).unwrap();
        let va = GridAxis::new(1.0, 0.1, 81).unwrap();
        let g = m.evaluate(&ha, &va).unwrap();
        for i in 0..41 {
            for j in 0..81 {
                assert!(rel_close(g.get(i, j), g.get(40 - i, 80 - j), 1e-12));
            }
        }
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = random_dataset(&mut rng, 100);
        let m = fit(&d).unwrap();
        let (ha0, va0) = default_axes(&m).unwrap();
        let ha = GridAxis::new(ha0.origin(), (ha0.last() - ha0.origin()) / 49.0, 50).unwrap();
        let va = GridAxis::new(va0.origin(), (va0.last() - va0.origin()) / 49.0, 50).unwrap();
        let g = m.evaluate(&ha, &va).unwrap();
        let oracle = brute_force(&d, m.b_hs, m.b_v, &ha, &va);
        for (a, b) in g.values().iter().zip(&oracle) {
            assert!(rel_close(*a, *b, 1e-12), "{a} vs {b}");
        }
    }

    #[test]
    fn truncation_error_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = random_dataset(&mut rng, 300);
        let m = fit(&d).unwrap();
        let (ha, va) = default_axes(&m).unwrap();
        let exact = m.evaluate(&ha, &va).unwrap();
        let opts = EvalOptions {
            truncation: Some(6.0),
            ..EvalOptions::default()
        };
        let cut = m.evaluate_with(&ha, &va, &opts).unwrap();
        let peak = exact.max_value();
        for (a, b) in exact.values().iter().zip(cut.values()) {
            assert!(b <= a);
            assert!((a - b) <= 2e-8 * peak);
        }
        assert!((exact.total_mass() - cut.total_mass()).abs() < 1e-8);
    }

    #[test]
    fn result_independent_of_thread_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = random_dataset(&mut rng, 5_000);
        let m = fit(&d).unwrap();
        let (ha, va) = default_axes(&m).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| m.evaluate(&ha, &va).unwrap())
        };
        let one = run(1);
        assert_eq!(one.values(), run(3).values());
        assert_eq!(one.values(), run(8).values());
    }

    #[test]
    fn default_axes_rule() {
        // data in [1, 2] with b = 0.25 → [0.0, 3.0]
        let d = Dataset::from_pairs(&[(1.0, 1.0), (2.0, 2.0)]).unwrap();
        let m = KdeModel::with_bandwidths(&d, 0.25, 0.25).unwrap();
        let (ha, va) = default_axes(&m).unwrap();
        assert_eq!(ha.origin(), 0.0);
        assert!((ha.last() - 3.0).abs() < 1e-12);
        assert_eq!(ha.step(), 0.1);
        assert_eq!(va, ha);

        let d = Dataset::from_pairs(&[(0.0, 0.0), (12.0, 30.0), (5.0, 10.0)]).unwrap();
        let m = fit(&d).unwrap();
        let (ha, va) = default_axes(&m).unwrap();
        assert_eq!(ha.origin(), 0.0);
        assert_eq!(va.origin(), 0.0);
        assert!(ha.last() >= 12.0 + 4.0 * m.b_hs - 1e-9);
        assert!(va.last() >= 30.0 + 4.0 * m.b_v - 1e-9);
    }

    #[test]
    fn strict_coverage_rejects_small_grid() {
        let d = Dataset::from_pairs(&[(1.0, 1.0), (2.0, 2.0)]).unwrap();
        let m = KdeModel::with_bandwidths(&d, 0.25, 0.25).unwrap();
        let ha = GridAxis::new(1.0, 0.1, 11).unwrap();
        let opts = EvalOptions {
            strict_coverage: true,
            ..EvalOptions::default()
        };
        assert!(matches!(m.evaluate_with(&ha, &ha, &opts), Err(Error::GridTooSmall(_))));
        // Non-strict evaluation still produces a grid.
        assert!(m.evaluate(&ha, &ha).is_ok());
    }

    #[test]
    fn duplicate_never_lowers_density_at_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let d = random_dataset(&mut rng, 50);
        let m = KdeModel::with_bandwidths(&d, 0.3, 0.8).unwrap();
        let mut samples = d.samples().to_vec();
        samples.push(samples[10].clone());
        let d2 = Dataset::new(samples, 1.0).unwrap();
        let m2 = KdeModel::with_bandwidths(&d2, 0.3, 0.8).unwrap();
        let p = &d.samples()[10];
        assert!(m2.density_at(p.hs, p.v) >= m.density_at(p.hs, p.v));
    }

    #[test]
    fn translation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = random_dataset(&mut rng, 80);
        let (dh, dv) = (1.5, 2.5);
        let shifted = Dataset::from_pairs(
            &d.samples().iter().map(|s| (s.hs + dh, s.v + dv)).collect::<Vec<_>>(),
        )
        .unwrap();
        let m = KdeModel::with_bandwidths(&d, 0.4, 1.1).unwrap();
        let ms = KdeModel::with_bandwidths(&shifted, 0.4, 1.1).unwrap();
        let ha = GridAxis::new(0.0, 0.125, 48).unwrap();
        let va = GridAxis::new(0.0, 0.25, 80).unwrap();
        let ha_s = GridAxis::new(dh, 0.125, 48).unwrap();
        let va_s = GridAxis::new(dv, 0.25, 80).unwrap();
        let g = m.evaluate(&ha, &va).unwrap();
        let gs = ms.evaluate(&ha_s, &va_s).unwrap();
        for (a, b) in g.values().iter().zip(gs.values()) {
            assert!(rel_close(*a, *b, 1e-12), "{a} vs {b}");
        }
    }
}
