//! Weighted Levenberg–Marquardt fit of `y ≈ c1 + c2 * x^c3`.

use super::DependenceFn;
use crate::error::{Error, Result};

const MAX_ITER: usize = 10_000;
const TOL: f64 = 1e-14;
/// Exponents are kept inside this range. Positive exponents keep the law
/// monotone and finite down to h = 0, so it cannot blow up between the
/// distribution's location and the first bin; above 8 it is numerically
/// degenerate on Hs values of a few meters.
const C3_RANGE: (f64, f64) = (0.01, 8.0);

#[derive(Debug, Clone, Copy)]
pub struct PowerLawFit {
    pub function: DependenceFn,
    pub iterations: usize,
    pub weighted_sse: f64,
}

fn sse(p: [f64; 3], x: &[f64], y: &[f64], w: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(w)
        .map(|((&xi, &yi), &wi)| wi * (yi - p[0] - p[1] * xi.powf(p[2])).powi(2))
        .sum()
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    if !(d.abs() > 0.0) || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut m = a;
        for r in 0..3 {
            m[r][k] = b[r];
        }
        *slot = det(m) / d;
    }
    Some(out)
}

fn levenberg_marquardt(start: [f64; 3], x: &[f64], y: &[f64], w: &[f64]) -> ([f64; 3], f64, usize) {
    let mut p = start;
    let mut cost = sse(p, x, y, w);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for ((&xi, &yi), &wi) in x.iter().zip(y).zip(w) {
            let xp = xi.powf(p[2]);
            let r = yi - p[0] - p[1] * xp;
            let g = [1.0, xp, p[1] * xp * xi.ln()];
            for a in 0..3 {
                jtr[a] += wi * g[a] * r;
                for b in 0..3 {
                    jtj[a][b] += wi * g[a] * g[b];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e16 {
            let mut damped = jtj;
            for (a, row) in damped.iter_mut().enumerate() {
                row[a] += lambda * jtj[a][a].max(1e-12);
            }
            if let Some(step) = solve3(damped, jtr) {
                let mut trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2]];
                trial[2] = trial[2].clamp(C3_RANGE.0, C3_RANGE.1);
                let trial_cost = sse(trial, x, y, w);
                if trial_cost.is_finite() && trial_cost <= cost {
                    let converged = cost - trial_cost <= TOL * cost.max(f64::MIN_POSITIVE)
                        && step.iter().zip(&p).all(|(s, q)| s.abs() <= 1e-10 * (1.0 + q.abs()));
                    p = trial;
                    cost = trial_cost;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = true;
                    if converged {
                        return (p, cost, iterations);
                    }
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            // No downhill step at any damping: a stationary point.
            break;
        }
    }
    (p, cost, iterations)
}

/// Weighted least-squares power law through `(x, y)` with weights `w`.
///
/// Starts from a log-log regression of `y - y_first` on `x`, where `y_first`
/// is the value at the smallest `x`, plus a few fixed-exponent starts; the
/// best local optimum wins.
pub fn fit_power_law(x: &[f64], y: &[f64], w: &[f64]) -> Result<PowerLawFit> {
    if x.len() < 3 || x.len() != y.len() || x.len() != w.len() {
        return Err(Error::FitFailure(format!(
            "power-law fit needs at least 3 matching points, got {}",
            x.len()
        )));
    }
    if x.iter().any(|&xi| !(xi > 0.0)) {
        return Err(Error::FitFailure("power-law abscissae must be positive".into()));
    }

    let mut starts = Vec::new();
    let first = x
        .iter()
        .zip(y)
        .min_by(|a, b| a.0.total_cmp(b.0))
        .map(|(_, &yi)| yi)
        .unwrap_or(0.0);
    if let Some((slope, intercept, sign)) = loglog_start(x, y, first) {
        starts.push([first, sign * intercept.exp(), slope.clamp(C3_RANGE.0, C3_RANGE.1)]);
    }
    for c3 in [0.5, 1.0, 2.0] {
        // Linear regression of y on x^c3.
        let xs: Vec<f64> = x.iter().map(|xi| xi.powf(c3)).collect();
        let (slope, intercept) = weighted_line(&xs, y, w);
        starts.push([intercept, slope, c3]);
    }

    let mut total_iterations = 0;
    let mut best: Option<([f64; 3], f64)> = None;
    for start in starts {
        let (p, cost, iterations) = levenberg_marquardt(start, x, y, w);
        total_iterations += iterations;
        if cost.is_finite() && best.is_none_or(|(_, c)| cost < c) {
            best = Some((p, cost));
        }
    }
    let (p, cost) = best.ok_or_else(|| Error::FitFailure("power-law fit diverged".into()))?;
    Ok(PowerLawFit {
        function: DependenceFn::new(p[0], p[1], p[2]),
        iterations: total_iterations,
        weighted_sse: cost,
    })
}

/// `(slope, intercept, sign)` of `ln |y - offset|` against `ln x`, using only
/// points on the majority side of `offset`.
fn loglog_start(x: &[f64], y: &[f64], offset: f64) -> Option<(f64, f64, f64)> {
    let above = y.iter().filter(|&&yi| yi > offset).count();
    let below = y.iter().filter(|&&yi| yi < offset).count();
    let sign = if above >= below { 1.0 } else { -1.0 };
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(_, &yi)| sign * (yi - offset) > 0.0)
        .map(|(&xi, &yi)| (xi.ln(), (sign * (yi - offset)).ln()))
        .unzip();
    if lx.len() < 2 {
        return None;
    }
    let (slope, intercept) = weighted_line(&lx, &ly, &vec![1.0; lx.len()]);
    (slope.is_finite() && intercept.is_finite()).then_some((slope, intercept, sign))
}

fn weighted_line(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64) {
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((a, b), c)| c * (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().zip(w).map(|(a, c)| c * (a - mx) * (a - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_is_recovered() {
        let x: Vec<f64> = (0..12).map(|i| 0.25 + 0.5 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|xi| 2.0 + 4.0 * xi.powf(0.8)).collect();
        let w = vec![1.0; x.len()];
        let fit = fit_power_law(&x, &y, &w).unwrap();
        let f = fit.function;
        assert!((f.c1 - 2.0).abs() < 1e-6, "{f:?}");
        assert!((f.c2 - 4.0).abs() < 1e-6, "{f:?}");
        assert!((f.c3 - 0.8).abs() < 1e-6, "{f:?}");
    }

    #[test]
    fn decreasing_law() {
        let x: Vec<f64> = (0..10).map(|i| 0.25 + 0.5 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|xi| 5.0 - 0.7 * xi.powf(1.3)).collect();
        let w: Vec<f64> = (0..10).map(|i| 1000.0 / (1 + i) as f64).collect();
        let f = fit_power_law(&x, &y, &w).unwrap().function;
        assert!((f.c1 - 5.0).abs() < 1e-6 && (f.c2 + 0.7).abs() < 1e-6 && (f.c3 - 1.3).abs() < 1e-6, "{f:?}");
    }

    #[test]
    fn too_few_points() {
        assert!(fit_power_law(&[1.0, 2.0], &[1.0, 2.0], &[1.0, 1.0]).is_err());
    }
}
