//! Split R-hat, effective sample size and per-quantity summaries.

use thiserror::Error;

use super::DrawsStore;
use crate::math::{mean, Summary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DiagnosticError {
    /// Every draw is identical: the statistic is undefined.
    #[error("zero variance across all draws")]
    ZeroVariance,
    #[error("need at least {needed} {what}, got {got}")]
    TooFew {
        what: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("chains have unequal lengths")]
    Ragged,
    #[error("non-finite draw")]
    NonFinite,
}

fn check(chains: &[Vec<f64>], min_chains: usize, min_draws: usize) -> Result<usize, DiagnosticError> {
    if chains.len() < min_chains {
        return Err(DiagnosticError::TooFew {
            what: "chains",
            needed: min_chains,
            got: chains.len(),
        });
    }
    let n = chains[0].len();
    if chains.iter().any(|c| c.len() != n) {
        return Err(DiagnosticError::Ragged);
    }
    if n < min_draws {
        return Err(DiagnosticError::TooFew {
            what: "draws per chain",
            needed: min_draws,
            got: n,
        });
    }
    if chains.iter().flatten().any(|x| !x.is_finite()) {
        return Err(DiagnosticError::NonFinite);
    }
    let first = chains[0][0];
    if chains.iter().flatten().all(|&x| x == first) {
        return Err(DiagnosticError::ZeroVariance);
    }
    Ok(n)
}

fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Split potential scale reduction factor: each chain is cut in half (the
/// middle draw dropped for odd lengths) and the classic between/within
/// variance ratio is computed over the halves.
pub fn split_rhat(chains: &[Vec<f64>]) -> Result<f64, DiagnosticError> {
    let n = check(chains, 2, 4)?;
    let half = n / 2;
    let halves: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| [&c[..half], &c[n - half..]])
        .collect();
    let means: Vec<f64> = halves.iter().map(|h| mean(h)).collect();
    let within = mean(&halves.iter().map(|h| variance(h)).collect::<Vec<_>>());
    let between_over_n = variance(&means);
    if within == 0.0 {
        return Ok(f64::INFINITY);
    }
    let var_plus = (half as f64 - 1.0) / half as f64 * within + between_over_n;
    Ok((var_plus / within).sqrt())
}

/// Biased autocovariance at `lag` (denominator `n`).
fn autocov(x: &[f64], m: f64, lag: usize) -> f64 {
    let n = x.len();
    x[..n - lag]
        .iter()
        .zip(&x[lag..])
        .map(|(a, b)| (a - m) * (b - m))
        .sum::<f64>()
        / n as f64
}

/// Multi-chain effective sample size using Geyer's initial positive and
/// initial monotone sequence truncation. Capped at the total number of
/// draws.
pub fn ess(chains: &[Vec<f64>]) -> Result<f64, DiagnosticError> {
    let n = check(chains, 1, 4)?;
    let m = chains.len();
    let chain_mean: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let acov_at = |lag: usize| -> f64 {
        chains
            .iter()
            .zip(&chain_mean)
            .map(|(c, &mu)| autocov(c, mu, lag))
            .sum::<f64>()
            / m as f64
    };
    let nf = n as f64;
    let mean_var = acov_at(0) * nf / (nf - 1.0);
    let mut var_plus = mean_var * (nf - 1.0) / nf;
    if m > 1 {
        var_plus += variance(&chain_mean);
    }
    if var_plus <= 0.0 {
        return Err(DiagnosticError::ZeroVariance);
    }
    let rho = |lag: usize| 1.0 - (mean_var - acov_at(lag)) / var_plus;

    let mut rho_hat = vec![0.0; n];
    rho_hat[0] = 1.0;
    let mut rho_even = 1.0;
    let mut rho_odd = rho(1);
    rho_hat[1] = rho_odd;
    let mut t = 1;
    while t + 5 < n && rho_even + rho_odd > 0.0 {
        rho_even = rho(t + 1);
        rho_odd = rho(t + 2);
        if rho_even + rho_odd >= 0.0 {
            rho_hat[t + 1] = rho_even;
            rho_hat[t + 2] = rho_odd;
        }
        t += 2;
    }
    let max_t = t;
    if rho_even > 0.0 {
        rho_hat[max_t + 1] = rho_even;
    }
    let mut t = 1;
    while t + 2 <= max_t {
        let prev = rho_hat[t - 1] + rho_hat[t];
        if rho_hat[t + 1] + rho_hat[t + 2] > prev {
            rho_hat[t + 1] = prev / 2.0;
            rho_hat[t + 2] = prev / 2.0;
        }
        t += 2;
    }
    let total = (m * n) as f64;
    let tau = (-1.0 + 2.0 * rho_hat[..max_t].iter().sum::<f64>() + rho_hat[max_t + 1]).max(1.0 / total.log10());
    Ok((total / tau).min(total))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    pub name: String,
    pub summary: Summary,
    pub rhat: Result<f64, DiagnosticError>,
    pub ess: Result<f64, DiagnosticError>,
}

/// Mean, sd, 2.5% / 97.5% quantiles, split R-hat and ESS for every recorded
/// quantity whose name passes `keep`.
pub fn summarize(store: &DrawsStore, keep: impl Fn(&str) -> bool) -> Vec<ParamSummary> {
    store
        .names()
        .iter()
        .enumerate()
        .filter(|(_, n)| keep(n))
        .map(|(i, name)| {
            let chains = store.chains_of(i);
            let pooled: Vec<f64> = chains.iter().flatten().copied().collect();
            ParamSummary {
                name: name.clone(),
                summary: Summary::of(&pooled),
                rhat: split_rhat(&chains),
                ess: ess(&chains),
            }
        })
        .collect()
}
