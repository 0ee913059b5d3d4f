//! Cumulative-logit model for clustered ordinal outcomes:
//!
//! ```text
//! logit P(Y_ijk <= a | x, U_i, V_ij) = α_a − xᵀβ − U_i − V_ij,   a = 1..A−1
//! ```
//!
//! with `V_ij ~ Bridge(φ_V)` and `U_i = U*_i / φ_V`, `U*_i ~ Bridge(φ_U*)`, so
//! that the population-averaged model keeps the logistic form with
//! coefficients scaled by `φ_U* φ_V`.

mod draws;
mod likelihood;
mod marginal;
mod posterior;
mod prior;
mod transform;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use draws::DrawIndex;
pub use likelihood::{category_probs, linear_predictor, log_likelihood, obs_log_prob, pointwise_log_likelihood};
pub use marginal::{effect_interpretation, marginalize, EffectScale};
pub use posterior::Posterior;
pub use prior::{cauchy_log_pdf, half_cauchy_log_pdf, log_prior, PRIOR_SCALE};
pub use transform::{ParamLayout, ParamVector};

/// Random-effect structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    /// No random effects.
    Fixed,
    /// Family effects `V_ij` only.
    TwoLevel,
    /// Region effects `U_i` and family effects `V_ij`.
    ThreeLevel,
}

impl Level {
    pub fn has_family_effects(self) -> bool {
        self != Level::Fixed
    }

    pub fn has_region_effects(self) -> bool {
        self == Level::ThreeLevel
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Fixed => "fixed",
            Level::TwoLevel => "two",
            Level::ThreeLevel => "three",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(Level::Fixed),
            "two" | "two_level" => Ok(Level::TwoLevel),
            "three" | "three_level" => Ok(Level::ThreeLevel),
            other => Err(Error::Shape(format!(
                "unknown model level `{other}` (expected fixed, two or three)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    pub n_categories: usize,
    pub n_covariates: usize,
    pub level: Level,
}

impl ModelSpec {
    pub fn new(n_categories: usize, n_covariates: usize, level: Level) -> Result<Self> {
        if n_categories < 2 {
            return Err(Error::Shape(format!(
                "need at least 2 outcome categories, got {n_categories}"
            )));
        }
        Ok(ModelSpec {
            n_categories,
            n_covariates,
            level,
        })
    }

    pub fn n_thresholds(&self) -> usize {
        self.n_categories - 1
    }
}

/// Model parameters on their natural scale.
///
/// `phi_ustar` is present for three-level models only, `phi_v` for two- and
/// three-level models. `u` holds the region effects already divided by
/// `φ_V`; `v` holds family effects.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedParams {
    pub alpha_c: Vec<f64>,
    pub beta_c: Vec<f64>,
    pub phi_ustar: Option<f64>,
    pub phi_v: Option<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl ConstrainedParams {
    /// Fixed-effects parameters with no random-effect blocks.
    pub fn fixed(alpha_c: Vec<f64>, beta_c: Vec<f64>) -> Self {
        ConstrainedParams {
            alpha_c,
            beta_c,
            phi_ustar: None,
            phi_v: None,
            u: Vec::new(),
            v: Vec::new(),
        }
    }

    /// `φ_U* φ_V`, with absent factors taken as 1.
    pub fn attenuation(&self) -> f64 {
        self.phi_ustar.unwrap_or(1.0) * self.phi_v.unwrap_or(1.0)
    }

    pub(crate) fn check_thresholds(&self) -> Result<()> {
        check_ordered(&self.alpha_c)
    }
}

pub(crate) fn check_ordered(alpha: &[f64]) -> Result<()> {
    let ok = alpha.iter().all(|a| a.is_finite()) && alpha.windows(2).all(|w| w[0] < w[1]);
    if ok {
        Ok(())
    } else {
        Err(Error::UnorderedThresholds(alpha.to_vec()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_parsing() {
        assert_eq!("three".parse::<Level>().unwrap(), Level::ThreeLevel);
        assert_eq!("two".parse::<Level>().unwrap(), Level::TwoLevel);
        assert_eq!("fixed".parse::<Level>().unwrap(), Level::Fixed);
        assert!("four".parse::<Level>().is_err());
        assert_eq!(Level::TwoLevel.to_string(), "two");
    }

    #[test]
    fn spec_requires_two_categories() {
        assert!(ModelSpec::new(1, 0, Level::Fixed).is_err());
        assert_eq!(ModelSpec::new(3, 2, Level::Fixed).unwrap().n_thresholds(), 2);
    }
}
