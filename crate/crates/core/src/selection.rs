//! WAIC, LPML (harmonic-mean CPO) and DIC from a pointwise log-likelihood
//! matrix.

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::hmc::DrawsStore;
use crate::math::{log_mean_exp, CompensatedSum};
use crate::model::{pointwise_log_likelihood, ConstrainedParams, DrawIndex, ModelSpec};

/// `M × N` matrix of `log [Y_n | draw l]`, row-major by draw, with an
/// optional plug-in row evaluated at the posterior means.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseLogLik {
    n_draws: usize,
    n_obs: usize,
    values: Vec<f64>,
    plugin: Option<Vec<f64>>,
}

fn check_entries(what: &str, xs: &[f64]) -> Result<()> {
    match xs.iter().position(|x| !x.is_finite() || *x > 0.0) {
        None => Ok(()),
        Some(i) => Err(Error::Criteria(format!(
            "{what} entry {i} is {} (log-probabilities must be finite and <= 0)",
            xs[i]
        ))),
    }
}

impl PointwiseLogLik {
    pub fn new(rows: Vec<Vec<f64>>, plugin: Option<Vec<f64>>) -> Result<Self> {
        let n_obs = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_obs) {
            return Err(Error::Criteria("rows of unequal length".into()));
        }
        if let Some(p) = &plugin {
            if p.len() != n_obs {
                return Err(Error::Criteria(format!(
                    "plug-in row has {} entries for {n_obs} observations",
                    p.len()
                )));
            }
            check_entries("plug-in", p)?;
        }
        let n_draws = rows.len();
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        check_entries("matrix", &values)?;
        Ok(PointwiseLogLik {
            n_draws,
            n_obs,
            values,
            plugin,
        })
    }

    /// Evaluates the conditional pointwise log-likelihood of every stored
    /// draw; the plug-in row uses posterior means of the conditional-scale
    /// parameters and effects.
    pub fn from_store(store: &DrawsStore, data: &Dataset, spec: &ModelSpec) -> Result<Self> {
        let index = DrawIndex::new(store.names(), spec, data.n_regions(), data.n_families())?;
        let draws: Vec<&[f64]> = store.draws().collect();
        let rows = draws
            .par_iter()
            .map(|d| pointwise_log_likelihood(&index.params(d), data, spec))
            .collect::<Result<Vec<_>>>()?;
        let plugin = if draws.is_empty() {
            None
        } else {
            let mean = posterior_mean(&draws.iter().map(|d| index.params(d)).collect::<Vec<_>>());
            Some(pointwise_log_likelihood(&mean, data, spec)?)
        };
        PointwiseLogLik::new(rows, plugin)
    }

    pub fn n_draws(&self) -> usize {
        self.n_draws
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn row(&self, l: usize) -> &[f64] {
        &self.values[l * self.n_obs..(l + 1) * self.n_obs]
    }

    pub fn column(&self, n: usize) -> Vec<f64> {
        (0..self.n_draws).map(|l| self.values[l * self.n_obs + n]).collect()
    }

    pub fn plugin(&self) -> Option<&[f64]> {
        self.plugin.as_deref()
    }
}

fn posterior_mean(draws: &[ConstrainedParams]) -> ConstrainedParams {
    let m = draws.len() as f64;
    let avg = |get: &dyn Fn(&ConstrainedParams) -> &[f64]| -> Vec<f64> {
        let k = get(&draws[0]).len();
        (0..k)
            .map(|i| draws.iter().map(|d| get(d)[i]).collect::<CompensatedSum>().value() / m)
            .collect()
    };
    let avg_opt = |get: &dyn Fn(&ConstrainedParams) -> Option<f64>| -> Option<f64> {
        get(&draws[0])?;
        Some(draws.iter().filter_map(get).collect::<CompensatedSum>().value() / m)
    };
    ConstrainedParams {
        alpha_c: avg(&|d| &d.alpha_c),
        beta_c: avg(&|d| &d.beta_c),
        phi_ustar: avg_opt(&|d| d.phi_ustar),
        phi_v: avg_opt(&|d| d.phi_v),
        u: avg(&|d| &d.u),
        v: avg(&|d| &d.v),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waic {
    pub waic: f64,
    pub lppd: f64,
    /// Effective number of parameters.
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lpml {
    pub lpml: f64,
    pub cpo: Vec<f64>,
    pub log_cpo: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dic {
    pub dic: f64,
    /// Posterior mean deviance.
    pub dbar: f64,
    /// Deviance at the posterior means.
    pub dhat: f64,
}

pub fn waic(pll: &PointwiseLogLik) -> Result<Waic> {
    let m = pll.n_draws;
    if m < 2 {
        return Err(Error::Criteria(format!("WAIC needs at least 2 draws, got {m}")));
    }
    let terms: Vec<(f64, f64)> = (0..pll.n_obs)
        .into_par_iter()
        .map(|n| {
            let col = pll.column(n);
            // Shifted by the first draw so constant columns give exactly zero variance.
            let mean = col[0] + col.iter().map(|x| x - col[0]).collect::<CompensatedSum>().value() / m as f64;
            let var = col
                .iter()
                .map(|x| (x - mean) * (x - mean))
                .collect::<CompensatedSum>()
                .value()
                / m as f64;
            (log_mean_exp(&col), var)
        })
        .collect();
    let lppd = terms.iter().map(|t| t.0).collect::<CompensatedSum>().value();
    let rho = terms.iter().map(|t| t.1).collect::<CompensatedSum>().value();
    Ok(Waic {
        waic: -2.0 * (lppd - rho),
        lppd,
        rho,
    })
}

pub fn lpml(pll: &PointwiseLogLik) -> Result<Lpml> {
    let m = pll.n_draws;
    if m < 1 {
        return Err(Error::Criteria("LPML needs at least 1 draw".into()));
    }
    let log_cpo: Vec<f64> = (0..pll.n_obs)
        .into_par_iter()
        .map(|n| {
            let neg: Vec<f64> = pll.column(n).iter().map(|x| -x).collect();
            -log_mean_exp(&neg)
        })
        .collect();
    if let Some(n) = log_cpo.iter().position(|x| !x.is_finite()) {
        return Err(Error::Criteria(format!(
            "harmonic-mean CPO is not finite for observation {}",
            n + 1
        )));
    }
    Ok(Lpml {
        lpml: log_cpo.iter().copied().collect::<CompensatedSum>().value(),
        cpo: log_cpo.iter().map(|x| x.exp()).collect(),
        log_cpo,
    })
}

pub fn dic(pll: &PointwiseLogLik) -> Result<Dic> {
    let plugin = pll
        .plugin
        .as_deref()
        .ok_or_else(|| Error::Criteria("DIC needs the plug-in row at the posterior means".into()))?;
    if pll.n_draws < 1 {
        return Err(Error::Criteria("DIC needs at least 1 draw".into()));
    }
    let dbar = (0..pll.n_draws)
        .map(|l| -2.0 * pll.row(l).iter().copied().collect::<CompensatedSum>().value())
        .collect::<CompensatedSum>()
        .value()
        / pll.n_draws as f64;
    let dhat = -2.0 * plugin.iter().copied().collect::<CompensatedSum>().value();
    Ok(Dic {
        dic: 2.0 * dbar - dhat,
        dbar,
        dhat,
    })
}
