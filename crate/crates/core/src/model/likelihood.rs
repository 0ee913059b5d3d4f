use super::{check_ordered, ConstrainedParams, Level, ModelSpec};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::math::{log_logistic, logistic, CompensatedSum};

/// `ln(1e-300)`: category probabilities are floored here before the log.
pub(crate) const LOG_PROB_FLOOR: f64 = -690.775_527_898_213_7;

/// `η = xᵀβ + U_i + V_ij`, absent blocks contributing zero.
pub fn linear_predictor(
    cp: &ConstrainedParams,
    x: &[f64],
    region: usize,
    family: usize,
    spec: &ModelSpec,
) -> Result<f64> {
    if x.len() != cp.beta_c.len() {
        return Err(Error::Shape(format!(
            "covariate row of length {} against {} coefficients",
            x.len(),
            cp.beta_c.len()
        )));
    }
    let mut eta: f64 = x.iter().zip(&cp.beta_c).map(|(x, b)| x * b).sum();
    if spec.level.has_region_effects() {
        eta += *cp.u.get(region).ok_or(Error::IndexOutOfRange {
            what: "region",
            index: region,
            len: cp.u.len(),
        })?;
    }
    if spec.level.has_family_effects() {
        eta += *cp.v.get(family).ok_or(Error::IndexOutOfRange {
            what: "family",
            index: family,
            len: cp.v.len(),
        })?;
    }
    Ok(eta)
}

/// Category probabilities `P(Y = a) = logistic(α_a − η) − logistic(α_{a−1} − η)`
/// with `α_0 = −∞` and `α_A = +∞`.
pub fn category_probs(eta: f64, alpha: &[f64]) -> Result<Vec<f64>> {
    check_ordered(alpha)?;
    let n = alpha.len() + 1;
    Ok((1..=n).map(|y| category_prob_unchecked(y, alpha, eta)).collect())
}

#[inline]
fn category_prob_unchecked(y: usize, alpha: &[f64], eta: f64) -> f64 {
    let n = alpha.len() + 1;
    if y == 1 {
        logistic(alpha[0] - eta)
    } else if y == n {
        logistic(eta - alpha[n - 2])
    } else {
        let hi = alpha[y - 1] - eta;
        let lo = alpha[y - 2] - eta;
        logistic(hi) * logistic(-lo) * -(lo - hi).exp_m1()
    }
}

/// Per-observation log-probability with its derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ObsTerm {
    pub log_p: f64,
    pub d_eta: f64,
    /// Derivative in `α_{y−1}` (zero for `y = 1`).
    pub d_alpha_lo: f64,
    /// Derivative in `α_y` (zero for `y = A`).
    pub d_alpha_hi: f64,
}

/// `log P(Y = y | η, α)` for 1-based `y`, evaluated in log space, with
/// gradient. Probabilities below 1e-300 are floored (zero gradient).
#[inline]
pub(crate) fn obs_term(y: usize, alpha: &[f64], eta: f64) -> ObsTerm {
    let n = alpha.len() + 1;
    let term = if y == 1 {
        let hi = alpha[0] - eta;
        let s = logistic(-hi);
        ObsTerm {
            log_p: log_logistic(hi),
            d_eta: -s,
            d_alpha_lo: 0.0,
            d_alpha_hi: s,
        }
    } else if y == n {
        let lo = alpha[n - 2] - eta;
        let s = logistic(lo);
        ObsTerm {
            log_p: log_logistic(-lo),
            d_eta: s,
            d_alpha_lo: -s,
            d_alpha_hi: 0.0,
        }
    } else {
        let hi = alpha[y - 1] - eta;
        let lo = alpha[y - 2] - eta;
        let gap = hi - lo;
        let em1 = gap.exp_m1();
        let s_lo = logistic(lo);
        let s_neg_hi = logistic(-hi);
        let inv = 1.0 / em1;
        ObsTerm {
            log_p: log_logistic(hi) + log_logistic(-lo) + (-(-gap).exp_m1()).ln(),
            d_eta: s_lo - s_neg_hi,
            d_alpha_lo: -s_lo - inv,
            d_alpha_hi: s_neg_hi + inv,
        }
    };
    if term.log_p < LOG_PROB_FLOOR || term.log_p.is_nan() {
        ObsTerm {
            log_p: LOG_PROB_FLOOR,
            d_eta: 0.0,
            d_alpha_lo: 0.0,
            d_alpha_hi: 0.0,
        }
    } else {
        term
    }
}

/// `log P(Y = y | η, α)` for one observation.
pub fn obs_log_prob(y: usize, eta: f64, alpha: &[f64]) -> Result<f64> {
    check_ordered(alpha)?;
    if y < 1 || y > alpha.len() + 1 {
        return Err(Error::Shape(format!(
            "outcome {y} outside 1..={}",
            alpha.len() + 1
        )));
    }
    Ok(obs_term(y, alpha, eta).log_p)
}

fn check_params(cp: &ConstrainedParams, data: &Dataset, spec: &ModelSpec) -> Result<()> {
    if data.n_categories() != spec.n_categories || data.n_covariates() != spec.n_covariates {
        return Err(Error::Shape(format!(
            "dataset has {} categories / {} covariates, model expects {} / {}",
            data.n_categories(),
            data.n_covariates(),
            spec.n_categories,
            spec.n_covariates
        )));
    }
    if cp.alpha_c.len() != spec.n_thresholds() || cp.beta_c.len() != spec.n_covariates {
        return Err(Error::Shape("parameter lengths do not match the model".into()));
    }
    if spec.level.has_region_effects() && cp.u.len() != data.n_regions() {
        return Err(Error::Shape(format!(
            "{} region effects for {} regions",
            cp.u.len(),
            data.n_regions()
        )));
    }
    if spec.level.has_family_effects() && cp.v.len() != data.n_families() {
        return Err(Error::Shape(format!(
            "{} family effects for {} families",
            cp.v.len(),
            data.n_families()
        )));
    }
    cp.check_thresholds()
}

/// Pointwise conditional log-likelihood `log [Y_n | U, V, θ]` for every observation.
pub fn pointwise_log_likelihood(cp: &ConstrainedParams, data: &Dataset, spec: &ModelSpec) -> Result<Vec<f64>> {
    check_params(cp, data, spec)?;
    let mut out = Vec::with_capacity(data.n_obs());
    pointwise_into(cp, data, spec.level, &mut out);
    Ok(out)
}

pub(crate) fn pointwise_into(cp: &ConstrainedParams, data: &Dataset, level: Level, out: &mut Vec<f64>) {
    out.clear();
    let regions = data.obs_region();
    let families = data.obs_family();
    for (n, &y) in data.outcomes().iter().enumerate() {
        let mut eta: f64 = data.row(n).iter().zip(&cp.beta_c).map(|(x, b)| x * b).sum();
        if level.has_region_effects() {
            eta += cp.u[regions[n]];
        }
        if level.has_family_effects() {
            eta += cp.v[families[n]];
        }
        out.push(obs_term(y, &cp.alpha_c, eta).log_p);
    }
}

/// Total conditional log-likelihood, summed with compensation so that the
/// value does not depend on observation order beyond rounding.
pub fn log_likelihood(cp: &ConstrainedParams, data: &Dataset, spec: &ModelSpec) -> Result<f64> {
    let pointwise = pointwise_log_likelihood(cp, data, spec)?;
    Ok(pointwise.into_iter().collect::<CompensatedSum>().value())
}
