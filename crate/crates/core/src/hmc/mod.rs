//! Gradient-based MCMC: leapfrog integration, the No-U-Turn sampler with
//! multinomial trajectory sampling, windowed step-size and diagonal-metric
//! adaptation, multi-chain runs and convergence diagnostics.

mod adapt;
mod chains;
pub mod diagnostics;
mod integrator;
mod nuts;

pub use adapt::{DualAveraging, WindowSchedule, WindowedAdaptation};
pub use chains::{adapt, run_chains, Adapted, DrawsStore, IterStats, STAT_NAMES};
pub use diagnostics::{ess, split_rhat, summarize, DiagnosticError, ParamSummary};
pub use integrator::{leapfrog, PhasePoint};
pub use nuts::{Nuts, TransitionStats};

use crate::error::{Error, Result};

/// A differentiable log-density on `R^dim`.
///
/// Points outside the support report a non-finite value; the sampler treats
/// them as divergent and never moves there.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;

    /// Returns `log p(position)` and writes its gradient into `grad`.
    fn log_density_and_grad(&self, position: &[f64], grad: &mut [f64]) -> f64;

    /// Names of the per-draw recorded quantities.
    fn output_names(&self) -> Vec<String> {
        (1..=self.dim()).map(|i| format!("theta[{i}]")).collect()
    }

    /// Appends the recorded quantities for one draw.
    fn write_outputs(&self, position: &[f64], out: &mut Vec<f64>) {
        out.extend_from_slice(position);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub n_chains: usize,
    /// Iterations per chain, warmup included.
    pub n_iterations: usize,
    pub n_warmup: usize,
    pub target_accept: f64,
    pub max_tree_depth: usize,
    pub seed: u64,
    /// Energy error beyond which a trajectory is declared divergent.
    pub max_delta_h: f64,
    /// Largest tolerated fraction of divergent retained transitions per chain.
    pub max_divergent_fraction: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_chains: 4,
            n_iterations: 2000,
            n_warmup: 1000,
            target_accept: 0.8,
            max_tree_depth: 10,
            seed: 0,
            max_delta_h: 1000.0,
            max_divergent_fraction: 0.1,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Sampling(msg));
        if self.n_chains < 1 {
            return bad("at least one chain is required".into());
        }
        if self.n_warmup >= self.n_iterations {
            return bad(format!(
                "warmup ({}) must be shorter than the chain length ({})",
                self.n_warmup, self.n_iterations
            ));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return bad(format!("target acceptance {} outside (0, 1)", self.target_accept));
        }
        if self.max_tree_depth < 1 {
            return bad("maximum tree depth must be at least 1".into());
        }
        if !(self.max_delta_h > 0.0) {
            return bad(format!("divergence threshold {} must be positive", self.max_delta_h));
        }
        Ok(())
    }

    pub fn n_retained(&self) -> usize {
        self.n_iterations - self.n_warmup
    }
}
