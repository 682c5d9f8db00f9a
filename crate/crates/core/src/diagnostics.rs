//! Exceedance diagnostics: how many samples fall outside a contour, and how
//! surprising that count is if every state were an independent Bernoulli
//! trial with probability α.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::grid::{Dataset, DensityGrid, ExceedanceProbability};
use crate::hdc::{count_exceedances, HdcResult};

/// Printed with every report.
pub const INDEPENDENCE_CAVEAT: &str = "Tail probabilities treat every sample as an independent \
Bernoulli trial. Consecutive hourly hindcast states are serially correlated, so the effective \
number of independent trials is smaller than n.";

/// Relative size below which further survival terms are dropped.
const TERM_CUTOFF: f64 = 1e-20;

/// `P(X > k)` for `X ~ Binomial(n, p)`.
///
/// Terms are generated in log space from a log-gamma start value and summed
/// smallest first. When `k` is below the mean the complement of the lower sum
/// is returned instead, which is then bounded away from zero.
pub fn binomial_tail(n: u64, p: f64, k: u64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("p must lie in (0, 1), got {p}")));
    }
    if k > n {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds n = {n}")));
    }
    if k == n {
        return Ok(0.0);
    }
    let nf = n as f64;
    let log_odds = p.ln() - (-p).ln_1p();
    let log_pmf = |j: u64| {
        let jf = j as f64;
        ln_gamma(nf + 1.0) - ln_gamma(jf + 1.0) - ln_gamma(nf - jf + 1.0)
            + jf * p.ln()
            + (nf - jf) * (-p).ln_1p()
    };

    if (k as f64) < nf * p {
        // Lower sum j = 0..=k; terms increase towards the mode.
        let mut logs = Vec::with_capacity(k as usize + 1);
        let mut lt = log_pmf(k);
        logs.push(lt);
        for j in (0..k).rev() {
            // t_j = t_{j+1} * (j + 1) / (n - j) / odds
            lt += ((j + 1) as f64).ln() - (nf - j as f64).ln() - log_odds;
            if lt - logs[0] < TERM_CUTOFF.ln() {
                break;
            }
            logs.push(lt);
        }
        let lower = sum_log_terms(&logs);
        return Ok((1.0 - lower).clamp(0.0, 1.0));
    }

    // Upper sum j = k+1..=n; terms decrease away from the mode.
    let mut logs = Vec::new();
    let mut lt = log_pmf(k + 1);
    let first = lt;
    logs.push(lt);
    for j in k + 1..n {
        // t_{j+1} = t_j * (n - j) / (j + 1) * odds
        lt += (nf - j as f64).ln() - ((j + 1) as f64).ln() + log_odds;
        if lt - first < TERM_CUTOFF.ln() {
            break;
        }
        logs.push(lt);
    }
    Ok(sum_log_terms(&logs).clamp(0.0, 1.0))
}

/// `Σ exp(logs)`, with the terms in decreasing order; adds smallest first.
fn sum_log_terms(logs: &[f64]) -> f64 {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return 0.0;
    }
    let scaled: f64 = logs.iter().rev().map(|l| (l - max).exp()).sum();
    max.exp() * scaled
}

/// Outcome of checking a dataset against one contour.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExceedanceReport {
    pub n: u64,
    pub alpha: ExceedanceProbability,
    pub observed_exceedances: u64,
    pub expected_exceedances: f64,
    /// `P(X > observed)` under `Binomial(n, alpha)`.
    pub tail_probability: f64,
}

pub fn exceedance_report(
    dataset: &Dataset,
    grid: &DensityGrid,
    result: &HdcResult,
) -> Result<ExceedanceReport> {
    let observed = count_exceedances(dataset, grid, result.threshold) as u64;
    report_from_count(dataset.len() as u64, result.alpha, observed)
}

pub fn report_from_count(
    n: u64,
    alpha: ExceedanceProbability,
    observed: u64,
) -> Result<ExceedanceReport> {
    Ok(ExceedanceReport {
        n,
        alpha,
        observed_exceedances: observed,
        expected_exceedances: n as f64 * alpha.value(),
        tail_probability: binomial_tail(n, alpha.value(), observed)?,
    })
}
