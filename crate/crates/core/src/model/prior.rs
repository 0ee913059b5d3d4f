use std::f64::consts::PI;

use super::{ConstrainedParams, ModelSpec};
use crate::bridge::{Bridge, ModifiedBridge};
use crate::error::{Error, Result};
use crate::math::CompensatedSum;

/// Scale of the Cauchy priors on thresholds and coefficients and of the
/// half-Cauchy priors on the Bridge standard deviations.
pub const PRIOR_SCALE: f64 = 5.0;

pub fn cauchy_log_pdf(x: f64, scale: f64) -> f64 {
    let z = x / scale;
    -(PI * scale).ln() - z.mul_add(z, 1.0).ln()
}

/// Half-Cauchy on `[0, ∞)`.
pub fn half_cauchy_log_pdf(x: f64, scale: f64) -> f64 {
    if x < 0.0 {
        f64::NEG_INFINITY
    } else {
        std::f64::consts::LN_2 + cauchy_log_pdf(x, scale)
    }
}

/// `d/dx` of [`cauchy_log_pdf`].
#[inline]
pub(crate) fn cauchy_log_pdf_grad(x: f64, scale: f64) -> f64 {
    -2.0 * x / (scale * scale + x * x)
}

/// Log prior density on the constrained scale:
///
/// * Cauchy(0, 5) on every `α^c` and `β^c`;
/// * half-Cauchy(0, 5) on the standard deviation of each Bridge family
///   (`φ_V`, and `φ_U*` in three-level models);
/// * Bridge(φ_V) on each family effect;
/// * modified Bridge(φ_U*, φ_V) on each region effect.
pub fn log_prior(cp: &ConstrainedParams, spec: &ModelSpec) -> Result<f64> {
    let mut acc = CompensatedSum::default();
    for &x in cp.alpha_c.iter().chain(&cp.beta_c) {
        acc.add(cauchy_log_pdf(x, PRIOR_SCALE));
    }
    let missing = |name: &str| Error::Shape(format!("`{name}` missing for a {} model", spec.level));
    if spec.level.has_family_effects() {
        let family = Bridge::new(cp.phi_v.ok_or_else(|| missing("phi_v"))?)?;
        acc.add(half_cauchy_log_pdf(family.sd(), PRIOR_SCALE));
        for &v in &cp.v {
            acc.add(family.log_pdf(v)?);
        }
    }
    if spec.level.has_region_effects() {
        let phi_ustar = cp.phi_ustar.ok_or_else(|| missing("phi_ustar"))?;
        acc.add(half_cauchy_log_pdf(Bridge::new(phi_ustar)?.sd(), PRIOR_SCALE));
        let region = ModifiedBridge::new(phi_ustar, cp.phi_v.ok_or_else(|| missing("phi_v"))?)?;
        for &u in &cp.u {
            acc.add(region.log_pdf(u)?);
        }
    }
    Ok(acc.value())
}
