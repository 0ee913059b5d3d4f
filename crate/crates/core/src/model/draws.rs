use super::{ConstrainedParams, ModelSpec};
use crate::error::{Error, Result};

/// Positions of the conditional-scale parameters inside a recorded draw, so
/// that stored draws can be turned back into [`ConstrainedParams`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DrawIndex {
    alpha_c: Vec<usize>,
    beta_c: Vec<usize>,
    phi_ustar: Option<usize>,
    phi_v: Option<usize>,
    u: Vec<usize>,
    v: Vec<usize>,
}

impl DrawIndex {
    pub fn new(names: &[String], spec: &ModelSpec, n_regions: usize, n_families: usize) -> Result<Self> {
        let find = |name: String| -> Result<usize> {
            names
                .iter()
                .position(|n| *n == name)
                .ok_or_else(|| Error::DrawsFormat(format!("draws have no `{name}` column")))
        };
        let many = |prefix: &str, n: usize| -> Result<Vec<usize>> {
            (1..=n).map(|i| find(format!("{prefix}[{i}]"))).collect()
        };
        let level = spec.level;
        Ok(DrawIndex {
            alpha_c: many("alpha_c", spec.n_thresholds())?,
            beta_c: many("beta_c", spec.n_covariates)?,
            phi_ustar: level.has_region_effects().then(|| find("phi_ustar".into())).transpose()?,
            phi_v: level.has_family_effects().then(|| find("phi_v".into())).transpose()?,
            u: if level.has_region_effects() { many("u", n_regions)? } else { Vec::new() },
            v: if level.has_family_effects() { many("v", n_families)? } else { Vec::new() },
        })
    }

    pub fn params(&self, draw: &[f64]) -> ConstrainedParams {
        let pick = |idx: &[usize]| idx.iter().map(|&i| draw[i]).collect();
        ConstrainedParams {
            alpha_c: pick(&self.alpha_c),
            beta_c: pick(&self.beta_c),
            phi_ustar: self.phi_ustar.map(|i| draw[i]),
            phi_v: self.phi_v.map(|i| draw[i]),
            u: pick(&self.u),
            v: pick(&self.v),
        }
    }
}
