use super::likelihood::obs_term;
use super::prior::{cauchy_log_pdf, cauchy_log_pdf_grad, half_cauchy_log_pdf, PRIOR_SCALE};
use super::transform::{FamilyEffect, SdTransform};
use super::{log_likelihood, log_prior, ConstrainedParams, ModelSpec, ParamLayout, ParamVector};
use crate::bridge::{modified_log_pdf_grad_unchecked, modified_log_pdf_unchecked};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::hmc::LogDensity;
use crate::math::CompensatedSum;

/// Joint log-posterior of parameters and random effects for one dataset.
#[derive(Debug, Clone)]
pub struct Posterior<'a> {
    data: &'a Dataset,
    spec: ModelSpec,
    layout: ParamLayout,
}

impl<'a> Posterior<'a> {
    pub fn new(data: &'a Dataset, spec: ModelSpec) -> Result<Self> {
        if data.n_categories() != spec.n_categories || data.n_covariates() != spec.n_covariates {
            return Err(Error::Shape(format!(
                "dataset has {} categories / {} covariates, model expects {} / {}",
                data.n_categories(),
                data.n_covariates(),
                spec.n_categories,
                spec.n_covariates
            )));
        }
        Ok(Posterior {
            data,
            spec,
            layout: ParamLayout::new(spec, data.n_regions(), data.n_families()),
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    /// Log-likelihood, log-prior and log-Jacobian at `theta`, each computed
    /// through the public constrained-scale functions.
    pub fn decomposed(&self, theta: &[f64]) -> Result<(f64, f64, f64)> {
        let (cp, log_jac) = self.layout.constrain(theta)?;
        Ok((
            log_likelihood(&cp, self.data, &self.spec)?,
            log_prior(&cp, &self.spec)?,
            log_jac,
        ))
    }

    pub fn unconstrain(&self, cp: &ConstrainedParams) -> Result<ParamVector> {
        self.layout.unconstrain(cp)
    }

    pub fn log_posterior(&self, theta: &[f64]) -> Result<f64> {
        let mut grad = vec![0.0; theta.len()];
        self.log_posterior_and_grad(theta, &mut grad)
    }

    /// Log-posterior on the unconstrained scale (likelihood + prior +
    /// log-Jacobian) and its exact gradient, written into `grad`.
    pub fn log_posterior_and_grad(&self, theta: &[f64], grad: &mut [f64]) -> Result<f64> {
        let l = &self.layout;
        if theta.len() != l.dim() || grad.len() != l.dim() {
            return Err(Error::Shape(format!(
                "parameter/gradient lengths {}/{} against layout dimension {}",
                theta.len(),
                grad.len(),
                l.dim()
            )));
        }
        grad.fill(0.0);
        let data = self.data;
        let level = self.spec.level;
        let n_alpha = self.spec.n_thresholds();

        let t = &theta[l.thresholds()];
        let mut alpha = Vec::with_capacity(n_alpha);
        for (a, &ta) in t.iter().enumerate() {
            alpha.push(if a == 0 { ta } else { alpha[a - 1] + ta.exp() });
        }
        let beta = &theta[l.beta()];
        let sd_u = l.w_ustar().map(|i| SdTransform::at(theta[i]));
        let sd_v = l.w_v().map(|i| SdTransform::at(theta[i]));
        let u = &theta[l.u()];
        let families: Vec<FamilyEffect> = match sd_v {
            Some(s) => theta[l.v()].iter().map(|&r| FamilyEffect::at(s.phi, r)).collect(),
            None => Vec::new(),
        };

        // Likelihood.
        let mut lik = CompensatedSum::default();
        let mut g_alpha = vec![0.0; n_alpha];
        let mut g_v = vec![0.0; families.len()];
        {
            let (g_head, g_rest) = grad.split_at_mut(l.beta().end);
            let g_beta = &mut g_head[l.beta()];
            let u_off = l.u().start - l.beta().end;
            let regions = data.obs_region();
            let fams = data.obs_family();
            for (n, &y) in data.outcomes().iter().enumerate() {
                let x = data.row(n);
                let mut eta: f64 = x.iter().zip(beta).map(|(x, b)| x * b).sum();
                if level.has_region_effects() {
                    eta += u[regions[n]];
                }
                if level.has_family_effects() {
                    eta += families[fams[n]].v;
                }
                let term = obs_term(y, &alpha, eta);
                lik.add(term.log_p);
                for (g, &xk) in g_beta.iter_mut().zip(x) {
                    *g += term.d_eta * xk;
                }
                if y > 1 {
                    g_alpha[y - 2] += term.d_alpha_lo;
                }
                if y <= n_alpha {
                    g_alpha[y - 1] += term.d_alpha_hi;
                }
                if level.has_region_effects() {
                    g_rest[u_off + regions[n]] += term.d_eta;
                }
                if level.has_family_effects() {
                    g_v[fams[n]] += term.d_eta;
                }
            }
        }

        // Thresholds: Cauchy prior on α, then chain to t with the gap Jacobian.
        let mut thresholds = CompensatedSum::default();
        for (a, &al) in alpha.iter().enumerate() {
            thresholds.add(cauchy_log_pdf(al, PRIOR_SCALE));
            g_alpha[a] += cauchy_log_pdf_grad(al, PRIOR_SCALE);
        }
        let mut tail = 0.0;
        for a in (0..n_alpha).rev() {
            tail += g_alpha[a];
            grad[a] = if a == 0 { tail } else { t[a].exp() * tail + 1.0 };
            if a > 0 {
                thresholds.add(t[a]);
            }
        }

        let mut coefficients = CompensatedSum::default();
        for (i, &b) in l.beta().zip(beta) {
            coefficients.add(cauchy_log_pdf(b, PRIOR_SCALE));
            grad[i] += cauchy_log_pdf_grad(b, PRIOR_SCALE);
        }

        let scale_term = |s: &SdTransform| {
            (
                half_cauchy_log_pdf(s.sd, PRIOR_SCALE) + s.log_abs_dsd_dw,
                cauchy_log_pdf_grad(s.sd, PRIOR_SCALE) * s.dsd_dw + s.dlog_abs_dsd_dw_dw,
            )
        };

        // Family block: scale prior plus the quantile-parameterized effects,
        // whose prior and Jacobian combine to a standard logistic density.
        let mut phi_v_block = 0.0;
        let mut v_block = CompensatedSum::default();
        if let (Some(s), Some(wi)) = (sd_v, l.w_v()) {
            let (val, g) = scale_term(&s);
            phi_v_block = val;
            grad[wi] += g;
            let mut g_w = 0.0;
            for ((i, fe), &gv) in l.v().zip(&families).zip(&g_v) {
                let (dv_dr, dv_dw) = fe.derivatives();
                grad[i] = gv * dv_dr + (fe.b - fe.a);
                g_w += gv * dv_dw;
                v_block.add(fe.log_logistic_density());
            }
            grad[wi] += g_w;
        }

        // Region block.
        let mut phi_u_block = 0.0;
        let mut u_block = CompensatedSum::default();
        if let (Some(su), Some(sv), Some(wu), Some(wv)) = (sd_u, sd_v, l.w_ustar(), l.w_v()) {
            let (val, g) = scale_term(&su);
            phi_u_block = val;
            grad[wu] += g;
            let (mut g_py, mut g_pz) = (0.0, 0.0);
            for (i, &ui) in l.u().zip(u) {
                u_block.add(modified_log_pdf_unchecked(su.phi, sv.phi, ui));
                let (dx, dy, dz) = modified_log_pdf_grad_unchecked(su.phi, sv.phi, ui);
                grad[i] += dx;
                g_py += dy;
                g_pz += dz;
            }
            grad[wu] += g_py * su.phi * (1.0 - su.phi);
            grad[wv] += g_pz * sv.phi * (1.0 - sv.phi);
        }

        let blocks = [
            ("likelihood", lik.value()),
            ("thresholds", thresholds.value()),
            ("beta", coefficients.value()),
            ("phi_ustar", phi_u_block),
            ("phi_v", phi_v_block),
            ("u", u_block.value()),
            ("v", v_block.value()),
        ];
        let value: f64 = blocks.iter().map(|(_, v)| v).sum();
        if !value.is_finite() {
            let block = blocks.iter().find(|(_, v)| !v.is_finite()).map_or("total", |(b, _)| b);
            return Err(Error::NonFiniteDensity { block });
        }
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteDensity {
                block: self.block_of(i),
            });
        }
        Ok(value)
    }

    fn block_of(&self, index: usize) -> &'static str {
        let l = &self.layout;
        if l.thresholds().contains(&index) {
            "thresholds"
        } else if l.beta().contains(&index) {
            "beta"
        } else if l.w_ustar() == Some(index) {
            "phi_ustar"
        } else if l.w_v() == Some(index) {
            "phi_v"
        } else if l.u().contains(&index) {
            "u"
        } else {
            "v"
        }
    }

    /// Names of the recorded quantities, 1-based:
    /// `alpha_m[a]`, `beta_m[k]`, `phi_ustar`, `phi_v`, `alpha_c[a]`,
    /// `beta_c[k]`, `u[i]`, `v[j]`.
    pub fn output_names(&self) -> Vec<String> {
        let a = self.spec.n_thresholds();
        let p = self.spec.n_covariates;
        let mut names = Vec::with_capacity(2 * (a + p) + 2 + self.layout.n_regions + self.layout.n_families);
        names.extend((1..=a).map(|i| format!("alpha_m[{i}]")));
        names.extend((1..=p).map(|i| format!("beta_m[{i}]")));
        if self.layout.w_ustar().is_some() {
            names.push("phi_ustar".into());
        }
        if self.layout.w_v().is_some() {
            names.push("phi_v".into());
        }
        names.extend((1..=a).map(|i| format!("alpha_c[{i}]")));
        names.extend((1..=p).map(|i| format!("beta_c[{i}]")));
        names.extend((1..=self.layout.n_regions).map(|i| format!("u[{i}]")));
        names.extend((1..=self.layout.n_families).map(|i| format!("v[{i}]")));
        names
    }

    /// Appends the recorded quantities at `theta` in [`Self::output_names`] order.
    pub fn write_outputs(&self, theta: &[f64], out: &mut Vec<f64>) -> Result<()> {
        let (cp, _) = self.layout.constrain(theta)?;
        let factor = cp.attenuation();
        out.extend(cp.alpha_c.iter().map(|a| a * factor));
        out.extend(cp.beta_c.iter().map(|b| b * factor));
        out.extend(cp.phi_ustar);
        out.extend(cp.phi_v);
        out.extend_from_slice(&cp.alpha_c);
        out.extend_from_slice(&cp.beta_c);
        out.extend_from_slice(&cp.u);
        out.extend_from_slice(&cp.v);
        Ok(())
    }
}

impl LogDensity for Posterior<'_> {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn log_density_and_grad(&self, position: &[f64], grad: &mut [f64]) -> f64 {
        self.log_posterior_and_grad(position, grad)
            .unwrap_or(f64::NEG_INFINITY)
    }

    fn output_names(&self) -> Vec<String> {
        Posterior::output_names(self)
    }

    fn write_outputs(&self, position: &[f64], out: &mut Vec<f64>) {
        if Posterior::write_outputs(self, position, out).is_err() {
            out.extend(std::iter::repeat_n(f64::NAN, Posterior::output_names(self).len()));
        }
    }
}
