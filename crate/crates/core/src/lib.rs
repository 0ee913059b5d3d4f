//! Bayesian cumulative-logit models for clustered ordinal outcomes with
//! Bridge-distributed random effects, whose population-averaged form stays
//! logistic. Includes a NUTS sampler, model selection criteria and posterior
//! predictive checks.

pub mod bridge;
pub mod data;
pub mod error;
pub mod hmc;
pub mod math;
pub mod model;
pub mod ppc;
pub mod quadrature;
pub mod selection;

pub use bridge::{bridge_log_pdf, bridge_variance, modified_bridge_variance, Bridge, ModifiedBridge};
pub use data::{Dataset, DatasetBuilder, EncodingPlan};
pub use error::{Error, Result};
pub use hmc::{run_chains, DrawsStore, LogDensity, SamplerConfig};
pub use model::{ConstrainedParams, Level, ModelSpec, Posterior};
