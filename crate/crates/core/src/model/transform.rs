//! Unconstrained parameterization used by the sampler.
//!
//! Layout of the flat vector, in order:
//!
//! | block     | length        | maps to                                        |
//! |-----------|---------------|------------------------------------------------|
//! | `t`       | A − 1         | `α₁ = t₁`, `α_a = α_{a−1} + exp(t_a)`          |
//! | `beta`    | p             | `β^c` (identity)                               |
//! | `w_ustar` | 1 (three)     | `φ_U* = logistic(w_ustar)`                     |
//! | `w_v`     | 1 (two/three) | `φ_V = logistic(w_v)`                          |
//! | `u`       | s (three)     | `U_i` (identity)                               |
//! | `r`       | F (two/three) | `V_ij = Q_Bridge(logistic(r_ij); φ_V)`         |
//!
//! Family effects are parameterized through the Bridge quantile function so
//! that `r_ij` has a standard logistic prior whatever the value of `φ_V`.
//!
//! The log-Jacobian covers the threshold gaps, the map from each `w` to the
//! implied Bridge standard deviation (the quantity carrying the half-Cauchy
//! prior) and the quantile map for every family effect.

use std::f64::consts::PI;
use std::ops::Range;

use super::{ConstrainedParams, ModelSpec};
use crate::bridge;
use crate::error::{Error, Result};
use crate::math::{log_logistic, logistic, logit};

/// Flat unconstrained parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Block offsets of the unconstrained vector for a given model and data size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    pub spec: ModelSpec,
    pub n_regions: usize,
    pub n_families: usize,
}

impl ParamLayout {
    pub fn new(spec: ModelSpec, n_regions: usize, n_families: usize) -> Self {
        ParamLayout {
            spec,
            n_regions: if spec.level.has_region_effects() { n_regions } else { 0 },
            n_families: if spec.level.has_family_effects() { n_families } else { 0 },
        }
    }

    pub fn thresholds(&self) -> Range<usize> {
        0..self.spec.n_thresholds()
    }

    pub fn beta(&self) -> Range<usize> {
        let start = self.thresholds().end;
        start..start + self.spec.n_covariates
    }

    pub fn w_ustar(&self) -> Option<usize> {
        self.spec.level.has_region_effects().then(|| self.beta().end)
    }

    pub fn w_v(&self) -> Option<usize> {
        let after = self.beta().end + usize::from(self.w_ustar().is_some());
        self.spec.level.has_family_effects().then_some(after)
    }

    fn scalars_end(&self) -> usize {
        self.beta().end + usize::from(self.w_ustar().is_some()) + usize::from(self.w_v().is_some())
    }

    pub fn u(&self) -> Range<usize> {
        let start = self.scalars_end();
        start..start + self.n_regions
    }

    pub fn v(&self) -> Range<usize> {
        let start = self.u().end;
        start..start + self.n_families
    }

    pub fn dim(&self) -> usize {
        self.v().end
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len == self.dim() {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "parameter vector has length {len}, layout expects {}",
                self.dim()
            )))
        }
    }

    /// Unconstrained → constrained, returning the log-Jacobian of the map.
    pub fn constrain(&self, theta: &[f64]) -> Result<(ConstrainedParams, f64)> {
        self.check_len(theta.len())?;
        let t = &theta[self.thresholds()];
        let mut log_jac = 0.0;
        let mut alpha_c = Vec::with_capacity(t.len());
        for (a, &ta) in t.iter().enumerate() {
            if a == 0 {
                alpha_c.push(ta);
            } else {
                alpha_c.push(alpha_c[a - 1] + ta.exp());
                log_jac += ta;
            }
        }
        let beta_c = theta[self.beta()].to_vec();
        let phi_ustar = self.w_ustar().map(|i| {
            let s = SdTransform::at(theta[i]);
            log_jac += s.log_abs_dsd_dw;
            s.phi
        });
        let phi_v = self.w_v().map(|i| {
            let s = SdTransform::at(theta[i]);
            log_jac += s.log_abs_dsd_dw;
            s.phi
        });
        let u = theta[self.u()].to_vec();
        let v = match phi_v {
            Some(phi) => theta[self.v()]
                .iter()
                .map(|&r| {
                    let q = FamilyEffect::at(phi, r);
                    log_jac += q.log_abs_dv_dr();
                    q.v
                })
                .collect(),
            None => Vec::new(),
        };
        Ok((
            ConstrainedParams {
                alpha_c,
                beta_c,
                phi_ustar,
                phi_v,
                u,
                v,
            },
            log_jac,
        ))
    }

    /// Constrained → unconstrained.
    pub fn unconstrain(&self, cp: &ConstrainedParams) -> Result<ParamVector> {
        let spec = &self.spec;
        if cp.alpha_c.len() != spec.n_thresholds() || cp.beta_c.len() != spec.n_covariates {
            return Err(Error::Shape(format!(
                "expected {} thresholds and {} coefficients, got {} and {}",
                spec.n_thresholds(),
                spec.n_covariates,
                cp.alpha_c.len(),
                cp.beta_c.len()
            )));
        }
        cp.check_thresholds()?;
        let mut theta = Vec::with_capacity(self.dim());
        for (a, &alpha) in cp.alpha_c.iter().enumerate() {
            theta.push(if a == 0 { alpha } else { (alpha - cp.alpha_c[a - 1]).ln() });
        }
        theta.extend_from_slice(&cp.beta_c);
        let phi_of = |name: &'static str, phi: Option<f64>| -> Result<f64> {
            let phi = phi.ok_or_else(|| Error::Shape(format!("`{name}` missing for this level")))?;
            bridge::Bridge::new(phi)?;
            Ok(logit(phi))
        };
        if spec.level.has_region_effects() {
            theta.push(phi_of("phi_ustar", cp.phi_ustar)?);
        }
        if spec.level.has_family_effects() {
            theta.push(phi_of("phi_v", cp.phi_v)?);
        }
        if cp.u.len() != self.n_regions || cp.v.len() != self.n_families {
            return Err(Error::Shape(format!(
                "expected {} region and {} family effects, got {} and {}",
                self.n_regions,
                self.n_families,
                cp.u.len(),
                cp.v.len()
            )));
        }
        theta.extend_from_slice(&cp.u);
        if let Some(phi) = cp.phi_v.filter(|_| spec.level.has_family_effects()) {
            for &v in &cp.v {
                // logit(F(v)) = log F(v) − log F(−v), each side accurate in its tail.
                theta.push(bridge::cdf_unchecked(phi, v).ln() - bridge::cdf_unchecked(phi, -v).ln());
            }
        }
        Ok(ParamVector(theta))
    }
}

/// Map from `w` to `φ = logistic(w)` and the Bridge standard deviation
/// `sd = (π/√3) sqrt(φ⁻² − 1)`, with the log-Jacobian `log|d sd / dw|` and
/// its derivative.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SdTransform {
    pub phi: f64,
    pub sd: f64,
    /// `d sd / dw` (negative: sd falls as φ rises).
    pub dsd_dw: f64,
    pub log_abs_dsd_dw: f64,
    pub dlog_abs_dsd_dw_dw: f64,
}

impl SdTransform {
    pub fn at(w: f64) -> Self {
        let phi = logistic(w);
        let one_minus = logistic(-w);
        let c = PI / 3f64.sqrt();
        let sd = c * ((1.0 - phi) * (1.0 + phi)).sqrt() / phi;
        // |d sd/dw| = c sqrt(1−φ) / (φ sqrt(1+φ))
        let abs_dsd_dw = c * one_minus.sqrt() / (phi * (1.0 + phi).sqrt());
        let log_abs_dsd_dw = c.ln() + 0.5 * log_logistic(-w) - log_logistic(w) - 0.5 * phi.ln_1p();
        let dlog = -0.5 * phi - one_minus - 0.5 * phi * one_minus / (1.0 + phi);
        SdTransform {
            phi,
            sd,
            dsd_dw: -abs_dsd_dw,
            log_abs_dsd_dw,
            dlog_abs_dsd_dw_dw: dlog,
        }
    }
}

/// A family effect evaluated from its unconstrained coordinate.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FamilyEffect {
    pub v: f64,
    /// `logistic(r)` and `logistic(−r)`.
    pub a: f64,
    pub b: f64,
    pub phi: f64,
    pub r: f64,
}

impl FamilyEffect {
    #[inline]
    pub fn at(phi: f64, r: f64) -> Self {
        let a = logistic(r);
        let b = logistic(-r);
        FamilyEffect {
            v: bridge::quantile_pair(phi, a, b),
            a,
            b,
            phi,
            r,
        }
    }

    /// `dv/dr` and `dv/dw` where `φ = logistic(w)`.
    #[inline]
    pub fn derivatives(&self) -> (f64, f64) {
        let theta = self.phi * PI;
        let cot_a = 1.0 / (theta * self.a).tan();
        let cot_b = 1.0 / (theta * self.b).tan();
        let dv_dr = PI * self.a * self.b * (cot_a + cot_b);
        let dv_dw = (1.0 - self.phi) * (PI * self.a * cot_a - PI * self.b * cot_b - self.v);
        (dv_dr, dv_dw)
    }

    /// `log|dv/dr|` = log-density of the standard logistic at `r` minus the
    /// Bridge log-density at `v`.
    pub fn log_abs_dv_dr(&self) -> f64 {
        self.log_logistic_density() - bridge::log_pdf_unchecked(self.phi, self.v)
    }

    #[inline]
    pub fn log_logistic_density(&self) -> f64 {
        log_logistic(self.r) + log_logistic(-self.r)
    }
}
