//! Bridge and modified Bridge distributions for the logit link.
//!
//! A Bridge(φ) random intercept `B` has the property that integrating it out
//! of a logistic model leaves a logistic model with attenuated coefficients:
//! `E[logistic(x - B)] = logistic(φ x)`. The density is
//!
//! ```text
//! f(x | φ) = sin(φπ) / (2π (cosh(φx) + cos(φπ))),   0 < φ < 1
//! ```
//!
//! The modified Bridge law is that of `Y / φ_Z` with `Y ~ Bridge(φ_Y)`.
//!
//! Both `cosh(φx)` and the log-density are evaluated without overflow for any
//! finite `x`. Sampling uses the closed-form inverse cdf.

use std::f64::consts::{LN_2, PI};

use rand::Rng;

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Distance from 0 and 1 inside which a concentration parameter is rejected.
pub const PHI_BOUNDARY: f64 = 1e-12;

/// Beyond this `|φx|` the log-sum-exp form of `cosh` is used.
const COSH_SWITCH: f64 = 20.0;

fn check_phi(name: &'static str, phi: f64) -> Result<f64> {
    if phi.is_finite() && phi > PHI_BOUNDARY && phi < 1.0 - PHI_BOUNDARY {
        Ok(phi)
    } else {
        Err(Error::Domain {
            name,
            value: phi,
            domain: "(0, 1)",
        })
    }
}

fn check_finite(name: &'static str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite { name, value: x })
    }
}

/// `log(cosh(z) + cos(theta))`.
///
/// Near zero this uses `2 (sinh²(z/2) + cos²(θ/2))`, which has no cancellation
/// when `cos θ` approaches -1; in the tails it factors out `e^|z|`.
#[inline]
fn log_cosh_plus_cos(z: f64, theta: f64) -> f64 {
    let az = z.abs();
    if az < COSH_SWITCH {
        let s = (0.5 * az).sinh();
        let c = (0.5 * theta).cos();
        (2.0 * (s * s + c * c)).ln()
    } else {
        let e = (-az).exp();
        az - LN_2 + (e * e + 2.0 * theta.cos() * e).ln_1p()
    }
}

/// `sinh(z) / (cosh(z) + cos(theta))`.
#[inline]
fn sinh_ratio(z: f64, theta: f64) -> f64 {
    let az = z.abs();
    if az < COSH_SWITCH {
        let s = (0.5 * az).sinh();
        let c = (0.5 * theta).cos();
        z.sinh() / (2.0 * (s * s + c * c))
    } else {
        let e = (-az).exp();
        z.signum() * (1.0 - e * e) / (1.0 + e * e + 2.0 * theta.cos() * e)
    }
}

#[inline]
pub(crate) fn log_pdf_unchecked(phi: f64, x: f64) -> f64 {
    let theta = phi * PI;
    theta.sin().ln() - LN_2PI - log_cosh_plus_cos(phi * x, theta)
}

/// Partial derivatives of the log-density in `x` and `φ`.
#[inline]
pub(crate) fn log_pdf_grad_unchecked(phi: f64, x: f64) -> (f64, f64) {
    let theta = phi * PI;
    let z = phi * x;
    let ratio = sinh_ratio(z, theta);
    let d_x = -phi * ratio;
    let d_phi = PI / theta.tan() - x * ratio + PI * theta.sin() * (-log_cosh_plus_cos(z, theta)).exp();
    (d_x, d_phi)
}

/// Quantile evaluated from the pair `(u, 1 - u)`, both supplied so that
/// either tail can be represented accurately.
#[inline]
pub(crate) fn quantile_pair(phi: f64, u: f64, u_complement: f64) -> f64 {
    let theta = phi * PI;
    ((theta * u).sin().ln() - (theta * u_complement).sin().ln()) / phi
}

/// Lower-tail probability `P(B <= x)`.
#[inline]
pub(crate) fn cdf_unchecked(phi: f64, x: f64) -> f64 {
    let theta = phi * PI;
    if x <= 0.0 {
        let e = (phi * x).exp();
        (e * theta.sin()).atan2(1.0 + e * theta.cos()) / theta
    } else {
        theta.sin().atan2((-phi * x).exp() + theta.cos()) / theta
    }
}

/// The Bridge distribution for the logit link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bridge {
    phi: f64,
}

impl Bridge {
    pub fn new(phi: f64) -> Result<Self> {
        Ok(Bridge {
            phi: check_phi("phi", phi)?,
        })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn log_pdf(&self, x: f64) -> Result<f64> {
        Ok(log_pdf_unchecked(self.phi, check_finite("x", x)?))
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        self.log_pdf(x).map(f64::exp)
    }

    /// `(∂/∂x, ∂/∂φ)` of the log-density.
    pub fn log_pdf_grad(&self, x: f64) -> Result<(f64, f64)> {
        Ok(log_pdf_grad_unchecked(self.phi, check_finite("x", x)?))
    }

    /// `π²/3 (φ⁻² − 1)`.
    pub fn variance(&self) -> f64 {
        bridge_variance_unchecked(self.phi)
    }

    pub fn sd(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x == f64::INFINITY {
            1.0
        } else if x == f64::NEG_INFINITY {
            0.0
        } else {
            cdf_unchecked(self.phi, x)
        }
    }

    /// `(1/φ) log(sin(φπu) / sin(φπ(1 − u)))`; infinite at `u = 0` and `u = 1`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain {
                name: "u",
                value: u,
                domain: "[0, 1]",
            });
        }
        Ok(quantile_pair(self.phi, u, 1.0 - u))
    }

    /// Draws one variate by inverting the cdf at a uniform deviate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = open_unit(rng);
        quantile_pair(self.phi, u, 1.0 - u)
    }
}

/// Law of `Y / φ_Z` where `Y ~ Bridge(φ_Y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModifiedBridge {
    phi_y: f64,
    phi_z: f64,
}

impl ModifiedBridge {
    pub fn new(phi_y: f64, phi_z: f64) -> Result<Self> {
        Ok(ModifiedBridge {
            phi_y: check_phi("phi_y", phi_y)?,
            phi_z: check_phi("phi_z", phi_z)?,
        })
    }

    pub fn phi_y(&self) -> f64 {
        self.phi_y
    }

    pub fn phi_z(&self) -> f64 {
        self.phi_z
    }

    pub fn log_pdf(&self, x: f64) -> Result<f64> {
        check_finite("x", x)?;
        Ok(modified_log_pdf_unchecked(self.phi_y, self.phi_z, x))
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        self.log_pdf(x).map(f64::exp)
    }

    /// `(∂/∂x, ∂/∂φ_Y, ∂/∂φ_Z)` of the log-density.
    pub fn log_pdf_grad(&self, x: f64) -> Result<(f64, f64, f64)> {
        check_finite("x", x)?;
        Ok(modified_log_pdf_grad_unchecked(self.phi_y, self.phi_z, x))
    }

    /// `π² / (3 φ_Z²) (φ_Y⁻² − 1)`.
    pub fn variance(&self) -> f64 {
        bridge_variance_unchecked(self.phi_y) / (self.phi_z * self.phi_z)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        Bridge { phi: self.phi_y }.cdf(self.phi_z * x)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Bridge { phi: self.phi_y }.sample(rng) / self.phi_z
    }
}

#[inline]
pub(crate) fn bridge_variance_unchecked(phi: f64) -> f64 {
    PI * PI / 3.0 * (1.0 / (phi * phi) - 1.0)
}

#[inline]
pub(crate) fn modified_log_pdf_unchecked(phi_y: f64, phi_z: f64, x: f64) -> f64 {
    phi_z.ln() + log_pdf_unchecked(phi_y, phi_z * x)
}

#[inline]
pub(crate) fn modified_log_pdf_grad_unchecked(phi_y: f64, phi_z: f64, x: f64) -> (f64, f64, f64) {
    let (d_y, d_phi_y) = log_pdf_grad_unchecked(phi_y, phi_z * x);
    (phi_z * d_y, d_phi_y, 1.0 / phi_z + x * d_y)
}

/// A uniform deviate in the open interval `(0, 1)`.
pub(crate) fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Log-density of `Bridge(φ)` at `x`.
pub fn bridge_log_pdf(x: f64, phi: f64) -> Result<f64> {
    Bridge::new(phi)?.log_pdf(x)
}

/// Variance of `Bridge(φ)`.
pub fn bridge_variance(phi: f64) -> Result<f64> {
    Ok(Bridge::new(phi)?.variance())
}

/// Variance of the modified Bridge law with parameters `(φ_Y, φ_Z)`.
pub fn modified_bridge_variance(phi_y: f64, phi_z: f64) -> Result<f64> {
    Ok(ModifiedBridge::new(phi_y, phi_z)?.variance())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn log_pdf_reference_points() {
        let b = Bridge::new(0.5).unwrap();
        assert!((b.log_pdf(0.0).unwrap() + 1.837_877_066_409_345).abs() < 1e-12);
        assert!((b.log_pdf(1.0).unwrap() + 1.957_991_573_367_623).abs() < 1e-12);
        let b = Bridge::new(0.7).unwrap();
        assert_eq!(b.log_pdf(-3.2).unwrap(), b.log_pdf(3.2).unwrap());
    }

    #[test]
    fn log_pdf_tails_do_not_overflow() {
        let b = Bridge::new(0.9).unwrap();
        for x in [700.0, 1e4, 1e300] {
            let lp = b.log_pdf(x).unwrap();
            assert!(lp.is_finite(), "x = {x}");
            assert_eq!(lp, b.log_pdf(-x).unwrap());
        }
        // Asymptotically log f ≈ log(sin φπ / π) − φ|x|.
        let x = 1e4;
        let expected = (0.9 * PI).sin().ln() - PI.ln() - 0.9 * x;
        assert!((b.log_pdf(x).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn both_branches_of_cosh_agree_at_switch() {
        for phi in [0.05, 0.5, 0.999] {
            let theta = phi * PI;
            let z = COSH_SWITCH;
            let direct = (z.cosh() + theta.cos()).ln();
            assert!((log_cosh_plus_cos(z * (1.0 - 1e-15), theta) - direct).abs() < 1e-12);
            assert!((log_cosh_plus_cos(z, theta) - direct).abs() < 1e-12);
            let r = z.sinh() / (z.cosh() + theta.cos());
            assert!((sinh_ratio(z, theta) - r).abs() < 1e-12);
        }
    }

    #[test]
    fn domain_errors() {
        for phi in [0.0, 1.0, -0.2, 1.5, 1e-13, 1.0 - 1e-13, f64::NAN] {
            assert!(Bridge::new(phi).is_err(), "phi = {phi}");
        }
        assert!(ModifiedBridge::new(0.5, 1.0).is_err());
        assert!(Bridge::new(0.5).unwrap().log_pdf(f64::INFINITY).is_err());
        assert!(Bridge::new(0.5).unwrap().log_pdf(f64::NAN).is_err());
        assert!(Bridge::new(0.5).unwrap().quantile(1.5).is_err());
    }

    #[test]
    fn grad_at_origin_and_reference() {
        for phi in [0.1, 0.5, 0.9] {
            let (dx, _) = Bridge::new(phi).unwrap().log_pdf_grad(0.0).unwrap();
            assert_eq!(dx, 0.0);
        }
        // Central finite difference of the log-density at (1.0, 0.5), step 1e-6.
        let (dx, _) = Bridge::new(0.5).unwrap().log_pdf_grad(1.0).unwrap();
        assert!((dx + 0.231_058_578_630_004_9).abs() < 1e-9);
    }

    #[test]
    fn grad_matches_finite_differences_on_grid() {
        let h = 1e-6;
        for &phi in &[0.15, 0.3, 0.5, 0.7, 0.85] {
            for &x in &[-4.0, -1.3, 0.4, 2.0, 6.5] {
                let b = Bridge::new(phi).unwrap();
                let (dx, dphi) = b.log_pdf_grad(x).unwrap();
                let fd_x = (log_pdf_unchecked(phi, x + h) - log_pdf_unchecked(phi, x - h)) / (2.0 * h);
                let fd_phi =
                    (log_pdf_unchecked(phi + h, x) - log_pdf_unchecked(phi - h, x)) / (2.0 * h);
                assert!((dx - fd_x).abs() <= 1e-5 * fd_x.abs().max(1e-3), "{phi} {x}");
                assert!((dphi - fd_phi).abs() <= 1e-5 * fd_phi.abs().max(1e-3), "{phi} {x}");
            }
        }
    }

    #[test]
    fn modified_grad_matches_finite_differences() {
        let h = 1e-6;
        let f = |y: f64, z: f64, x: f64| modified_log_pdf_unchecked(y, z, x);
        for &(py, pz, x) in &[(0.9, 0.8, 1.3), (0.4, 0.6, -2.2), (0.7, 0.95, 0.0)] {
            let (dx, dy, dz) = ModifiedBridge::new(py, pz).unwrap().log_pdf_grad(x).unwrap();
            let fx = (f(py, pz, x + h) - f(py, pz, x - h)) / (2.0 * h);
            let fy = (f(py + h, pz, x) - f(py - h, pz, x)) / (2.0 * h);
            let fz = (f(py, pz + h, x) - f(py, pz - h, x)) / (2.0 * h);
            assert!((dx - fx).abs() < 1e-7);
            assert!((dy - fy).abs() < 1e-7);
            assert!((dz - fz).abs() < 1e-7);
        }
    }

    #[test]
    fn variances() {
        assert!((bridge_variance(0.5).unwrap() - PI * PI).abs() < 1e-12);
        assert!((bridge_variance(0.821).unwrap() - 1.590_944_952_890_940_6).abs() < 1e-12);
        assert!((bridge_variance(0.6).unwrap() - 5.848_654_459_904_806).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for i in 1..100 {
            let v = bridge_variance(i as f64 / 100.0).unwrap();
            assert!(v > 0.0 && v < prev);
            prev = v;
        }
        assert!(bridge_variance(1.0 - 1e-9).unwrap() < 1e-8);
        assert!((modified_bridge_variance(0.5, 0.5).unwrap() - 4.0 * PI * PI).abs() < 1e-11);
        assert!((modified_bridge_variance(0.959, 0.821).unwrap() - 0.426_258_698_724_463_6).abs() < 1e-12);
        assert!((modified_bridge_variance(0.5, 1.0 - 1e-9).unwrap() - PI * PI).abs() < 1e-7);
    }

    #[test]
    fn modified_reduces_to_bridge() {
        let b = Bridge::new(0.6).unwrap();
        let m = ModifiedBridge::new(0.6, 1.0 - 1e-10).unwrap();
        for x in [-3.0, 0.0, 0.5, 8.0] {
            assert!((b.log_pdf(x).unwrap() - m.log_pdf(x).unwrap()).abs() < 1e-9);
        }
        let m = ModifiedBridge::new(0.5, 0.5).unwrap();
        assert!((m.log_pdf(0.0).unwrap() + 2.531_024_246_969_290_8).abs() < 1e-12);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let b = Bridge::new(0.35).unwrap();
        assert_eq!(b.quantile(0.5).unwrap(), 0.0);
        for u in [1e-9, 0.01, 0.3, 0.77, 0.999_999] {
            let x = b.quantile(u).unwrap();
            assert!((b.cdf(x) - u).abs() < 1e-12 * u.max(1e-3), "u = {u}");
        }
        assert_eq!(b.cdf(0.0), 0.5);
        assert_eq!(b.quantile(0.0).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn sampling_is_seeded() {
        let b = Bridge::new(0.4).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..5).map(|_| b.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }
}
