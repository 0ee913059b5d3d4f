use crate::error::{Error, Result};

/// Conditional → population-averaged coefficients: both vectors scaled by
/// `φ_U* · φ_V`. Pass `phi_ustar = 1` for a two-level model and both as 1 for
/// the fixed-effects model.
pub fn marginalize(alpha_c: &[f64], beta_c: &[f64], phi_ustar: f64, phi_v: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    for (name, phi) in [("phi_ustar", phi_ustar), ("phi_v", phi_v)] {
        if !(phi > 0.0 && phi <= 1.0) {
            return Err(Error::Domain {
                name,
                value: phi,
                domain: "(0, 1]",
            });
        }
    }
    let k = phi_ustar * phi_v;
    Ok((
        alpha_c.iter().map(|a| a * k).collect(),
        beta_c.iter().map(|b| b * k).collect(),
    ))
}

/// How a marginal coefficient is read as a percentage change in odds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EffectScale {
    /// One-unit change in the covariate: `(e^β − 1)·100`.
    OddsPercent,
    /// Covariate entered as a log, multiplied by the given factor:
    /// `(e^{β·ln m} − 1)·100`.
    LogCovariatePercent(f64),
}

pub fn effect_interpretation(beta_m: f64, scale: EffectScale) -> f64 {
    match scale {
        EffectScale::OddsPercent => beta_m.exp_m1() * 100.0,
        EffectScale::LogCovariatePercent(m) => (beta_m * m.ln()).exp_m1() * 100.0,
    }
}
