//! Weibull distributions and their maximum-likelihood fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NEWTON_MAX_ITER: usize = 200;
const NEWTON_TOL: f64 = 1e-12;
const LOCATION_SCAN: usize = 48;
const GOLDEN_MAX_ITER: usize = 300;
/// Smallest gap between the location and the sample minimum, relative to the
/// minimum. Below it the profile likelihood is numerically meaningless.
const MIN_RELATIVE_GAP: f64 = 1e-10;

/// Three-parameter Weibull distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weibull3 {
    pub scale: f64,
    pub shape: f64,
    pub location: f64,
}

impl Weibull3 {
    pub fn new(scale: f64, shape: f64, location: f64) -> Result<Self> {
        let ok = scale.is_finite() && scale > 0.0 && shape.is_finite() && shape > 0.0;
        if !ok || !(location.is_finite() && location >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Weibull parameters scale = {scale}, shape = {shape}, location = {location}"
            )));
        }
        Ok(Weibull3 {
            scale,
            shape,
            location,
        })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        weibull_pdf(x - self.location, self.scale, self.shape)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.location {
            return 0.0;
        }
        -(-((x - self.location) / self.scale).powf(self.shape)).exp_m1()
    }

    /// Inverse CDF for `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        self.location + self.scale * (-(-u).ln_1p()).powf(1.0 / self.shape)
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    pub fn log_likelihood(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .map(|&x| weibull_ln_pdf(x - self.location, self.scale, self.shape))
            .sum()
    }
}

/// Two-parameter Weibull density at `x`; zero for `x < 0`.
pub fn weibull_pdf(x: f64, scale: f64, shape: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let z = x / scale;
    shape / scale * z.powf(shape - 1.0) * (-z.powf(shape)).exp()
}

fn weibull_ln_pdf(x: f64, scale: f64, shape: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let z = x / scale;
    shape.ln() - scale.ln() + (shape - 1.0) * z.ln() - z.powf(shape)
}

/// Two-parameter maximum-likelihood fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weibull2Fit {
    pub scale: f64,
    pub shape: f64,
    pub log_likelihood: f64,
    pub iterations: usize,
}

/// Maximum-likelihood `(scale, shape)` for positive data with location 0.
///
/// With `y = ln x - mean(ln x)` the shape solves
/// `Σ y e^{k y} / Σ e^{k y} = 1/k`, whose left side increases and right side
/// decreases in `k`; a safeguarded Newton iteration finds the unique root.
pub fn fit_weibull2(values: &[f64]) -> Result<Weibull2Fit> {
    if values.len() < 2 {
        return Err(Error::FitFailure(format!(
            "Weibull fit needs at least 2 values, got {}",
            values.len()
        )));
    }
    if let Some(bad) = values.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::FitFailure(format!(
            "Weibull fit needs positive finite values, got {bad}"
        )));
    }
    let n = values.len() as f64;
    let logs: Vec<f64> = values.iter().map(|x| x.ln()).collect();
    let mean_log = logs.iter().sum::<f64>() / n;
    let y: Vec<f64> = logs.iter().map(|l| l - mean_log).collect();
    let y_max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let y_min = y.iter().copied().fold(f64::INFINITY, f64::min);
    if y_max - y_min < 1e-12 {
        return Err(Error::FitFailure("Weibull fit on constant data".into()));
    }

    // h(k) = Σ y w / Σ w - 1/k and h'(k) = weighted variance + 1/k², with
    // weights w = e^{k (y - y_max)}.
    let moments = |k: f64| {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for &yi in &y {
            let w = (k * (yi - y_max)).exp();
            s0 += w;
            s1 += w * yi;
            s2 += w * yi * yi;
        }
        let m1 = s1 / s0;
        (m1 - 1.0 / k, (s2 / s0 - m1 * m1) + 1.0 / (k * k))
    };

    // h(k) → -∞ as k → 0 and → y_max > 0 as k → ∞.
    let (mut lo, mut hi) = (1e-3, 1.0);
    while moments(hi).0 < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::FitFailure("Weibull shape diverges".into()));
        }
    }
    let mut k = 0.5 * (lo + hi);
    let mut iterations = 0;
    loop {
        iterations += 1;
        if iterations > NEWTON_MAX_ITER {
            return Err(Error::FitFailure(format!(
                "Weibull shape did not converge after {NEWTON_MAX_ITER} iterations \
                 (bracket [{lo}, {hi}])"
            )));
        }
        let (h, dh) = moments(k);
        if h < 0.0 {
            lo = k;
        } else {
            hi = k;
        }
        let mut next = k - h / dh;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - k).abs() <= NEWTON_TOL * k || hi - lo <= NEWTON_TOL * k;
        k = next;
        if done {
            break;
        }
    }

    let mean_w = y.iter().map(|yi| (k * (yi - y_max)).exp()).sum::<f64>() / n;
    // λ = exp(mean ln x) * (mean e^{k y})^{1/k}
    let scale = (mean_log + y_max + mean_w.ln() / k).exp();
    let sum_log_z: f64 = logs.iter().map(|l| l - scale.ln()).sum();
    let log_likelihood = n * (k.ln() - scale.ln()) + (k - 1.0) * sum_log_z - n;
    Ok(Weibull2Fit {
        scale,
        shape: k,
        log_likelihood,
        iterations,
    })
}

/// Three-parameter fit with the profile likelihood over the location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Weibull3Fit {
    pub dist: Weibull3,
    pub log_likelihood: f64,
    pub iterations: usize,
}

/// Maximum-likelihood three-parameter Weibull.
///
/// The location is searched on `[0, min(values))` by maximizing the profile
/// likelihood: a log-spaced scan of the gap `min - location` brackets the
/// maximum, then golden-section search refines it. Scale and shape come from
/// [`fit_weibull2`] at each candidate location.
pub fn fit_weibull3(values: &[f64]) -> Result<Weibull3Fit> {
    if values.len() < 50 {
        return Err(Error::FitFailure(format!(
            "three-parameter Weibull fit needs at least 50 values, got {}",
            values.len()
        )));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(min.is_finite() && max.is_finite()) || max - min <= 0.0 {
        return Err(Error::FitFailure(
            "three-parameter Weibull fit needs non-constant finite data".into(),
        ));
    }
    if min <= 0.0 {
        return Err(Error::FitFailure(format!(
            "three-parameter Weibull fit needs positive data, minimum is {min}"
        )));
    }

    let mut shifted = vec![0.0; values.len()];
    let mut profile = |log_gap: f64| -> (f64, Option<Weibull2Fit>) {
        let location = (min - log_gap.exp()).max(0.0);
        for (s, &x) in shifted.iter_mut().zip(values) {
            *s = x - location;
        }
        match fit_weibull2(&shifted) {
            Ok(fit) => (fit.log_likelihood, Some(fit)),
            Err(_) => (f64::NEG_INFINITY, None),
        }
    };

    let hi = min.ln();
    let lo = (min * MIN_RELATIVE_GAP).ln();
    let grid: Vec<f64> = (0..LOCATION_SCAN)
        .map(|i| lo + (hi - lo) * i as f64 / (LOCATION_SCAN - 1) as f64)
        .collect();
    let scores: Vec<f64> = grid.iter().map(|&g| profile(g).0).collect();
    let best = scores
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if scores[best] == f64::NEG_INFINITY {
        return Err(Error::FitFailure("profile likelihood undefined everywhere".into()));
    }

    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(LOCATION_SCAN - 1)];
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (profile(c).0, profile(d).0);
    let mut iterations = 0;
    while (b - a).abs() > 1e-10 * (1.0 + a.abs()) {
        iterations += 1;
        if iterations > GOLDEN_MAX_ITER {
            return Err(Error::FitFailure(format!(
                "location search did not converge after {GOLDEN_MAX_ITER} iterations \
                 (gap bracket [{}, {}])",
                a.exp(),
                b.exp()
            )));
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = profile(c).0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = profile(d).0;
        }
    }

    // The best scan point wins when the maximum sits on the search boundary.
    let (log_gap, fit) = [0.5 * (a + b), grid[best]]
        .into_iter()
        .filter_map(|g| profile(g).1.map(|f| (g, f)))
        .max_by(|x, y| x.1.log_likelihood.total_cmp(&y.1.log_likelihood))
        .ok_or_else(|| Error::FitFailure("profile likelihood undefined at optimum".into()))?;
    let location = (min - log_gap.exp()).max(0.0);
    Ok(Weibull3Fit {
        dist: Weibull3::new(fit.scale, fit.shape, location)?,
        log_likelihood: fit.log_likelihood,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn draw(dist: &Weibull3, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| dist.quantile(rng.random::<f64>())).collect()
    }

    fn within(x: f64, target: f64, rel: f64) -> bool {
        (x - target).abs() <= rel * target.abs()
    }

    #[test]
    fn pdf_integrates_to_one() {
        let d = Weibull3::new(2.0, 1.5, 0.5).unwrap();
        let h = 1e-3;
        let mass: f64 = (0..40_000).map(|i| d.pdf(0.5 + (i as f64 + 0.5) * h) * h).sum();
        // Midpoint rule error near the h^0.5 cusp at the location is O(h^1.5).
        assert!((mass - 1.0).abs() < 1e-4, "{mass}");
        assert_eq!(d.pdf(0.4), 0.0);
        assert!((d.cdf(d.median()) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn two_parameter_recovery() {
        let d = Weibull3::new(7.5, 2.3, 0.0).unwrap();
        let xs = draw(&d, 20_000, 2);
        let fit = fit_weibull2(&xs).unwrap();
        assert!(within(fit.scale, 7.5, 0.02), "{fit:?}");
        assert!(within(fit.shape, 2.3, 0.03), "{fit:?}");
        let ll = Weibull3::new(fit.scale, fit.shape, 0.0).unwrap().log_likelihood(&xs);
        assert!((ll - fit.log_likelihood).abs() < 1e-6 * ll.abs());
    }

    #[test]
    fn three_parameter_recovery() {
        let d = Weibull3::new(2.0, 1.5, 0.5).unwrap();
        let xs = draw(&d, 100_000, 17);
        let fit = fit_weibull3(&xs).unwrap();
        assert!(within(fit.dist.scale, 2.0, 0.02), "{fit:?}");
        assert!(within(fit.dist.shape, 1.5, 0.02), "{fit:?}");
        assert!(within(fit.dist.location, 0.5, 0.02), "{fit:?}");
    }

    #[test]
    fn exponential_data() {
        let d = Weibull3::new(1.3, 1.0, 0.0).unwrap();
        let xs = draw(&d, 100_000, 23);
        let fit = fit_weibull3(&xs).unwrap();
        assert!(within(fit.dist.shape, 1.0, 0.02), "{fit:?}");
    }

    #[test]
    fn failures() {
        assert!(matches!(fit_weibull3(&[3.0; 80]), Err(Error::FitFailure(_))));
        assert!(matches!(fit_weibull3(&[1.0, 2.0]), Err(Error::FitFailure(_))));
        assert!(matches!(fit_weibull2(&[1.0, 0.0, 2.0]), Err(Error::FitFailure(_))));
        assert!(matches!(fit_weibull2(&[2.0, 2.0, 2.0]), Err(Error::FitFailure(_))));
    }

    #[test]
    fn optimum_beats_perturbation_lattice() {
        let d = Weibull3::new(1.8, 1.7, 0.3).unwrap();
        let xs = draw(&d, 5_000, 99);
        let fit = fit_weibull3(&xs).unwrap();
        let best = fit.dist.log_likelihood(&xs);
        let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let steps: Vec<f64> = (0..10).map(|i| 0.95 + 0.1 * i as f64 / 9.0).collect();
        for &a in &steps {
            for &b in &steps {
                for &c in &steps {
                    let loc = fit.dist.location * c;
                    if loc >= min {
                        continue;
                    }
                    let p = Weibull3::new(fit.dist.scale * a, fit.dist.shape * b, loc).unwrap();
                    assert!(p.log_likelihood(&xs) <= best + 1e-6 * best.abs());
                }
            }
        }
    }
}
