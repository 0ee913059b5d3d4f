//! Batch front end: `simulate`, `fit`, `summarize`, `compare`, `ppc` and
//! `diagnose`. Every command is a pure function of its flags and input files;
//! wall-clock timings go to stderr only, so repeated runs write identical
//! bytes.

mod commands;
mod error;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ordbridge_core::{Level, SamplerConfig};

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "ordbridge", version, about = "Bridge cumulative-logit models for clustered ordinal data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic three-level dataset with known parameters.
    Simulate(SimulateArgs),
    /// Fit a model with NUTS and write draws, summaries and diagnostics.
    Fit(FitArgs),
    /// Summarize a draws file.
    Summarize(SummarizeArgs),
    /// Compare fitted models by LPML, WAIC and DIC.
    Compare(CompareArgs),
    /// Posterior predictive check by observed-minus-replicated category codes.
    Ppc(PpcArgs),
    /// Convergence diagnostics and plot-ready trace and density data.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON truth file; defaults to the built-in recovery fixture.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Comma-delimited dataset: region,family,outcome,covariates...
    #[arg(long)]
    pub data: PathBuf,
    /// Encoding sidecar (outcome order, categorical levels, log/center flags).
    #[arg(long)]
    pub encoding: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SamplerArgs {
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    /// Iterations per chain, warmup included.
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    #[arg(long, default_value_t = 1000)]
    pub warmup: usize,
    #[arg(long, default_value_t = 0.8)]
    pub target_accept: f64,
    #[arg(long, default_value_t = 10)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SamplerArgs {
    pub fn config(&self) -> CliResult<SamplerConfig> {
        let config = SamplerConfig {
            n_chains: self.chains,
            n_iterations: self.iters,
            n_warmup: self.warmup,
            target_accept: self.target_accept,
            max_tree_depth: self.max_depth,
            seed: self.seed,
            ..SamplerConfig::default()
        };
        config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelLevel {
    /// No random effects.
    Fixed,
    /// Family effects only.
    Two,
    /// Region and family effects.
    Three,
}

impl From<ModelLevel> for Level {
    fn from(m: ModelLevel) -> Level {
        match m {
            ModelLevel::Fixed => Level::Fixed,
            ModelLevel::Two => Level::TwoLevel,
            ModelLevel::Three => Level::ThreeLevel,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = ModelLevel::Three)]
    pub model: ModelLevel,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Also report conditional-scale thresholds and coefficients.
    #[arg(long)]
    pub conditional_scale: bool,
    /// Write draws in the compact binary form (draws.bin).
    #[arg(long)]
    pub binary: bool,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    #[arg(long)]
    pub draws: PathBuf,
    #[arg(long)]
    pub conditional_scale: bool,
    /// Write the summary here instead of only printing it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Draws files of the fitted models (repeatable).
    #[arg(long, required = true, num_args = 1..)]
    pub draws: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PpcArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub draws: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub draws: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Fit(a) => commands::fit(a),
        Command::Summarize(a) => commands::summarize(a),
        Command::Compare(a) => commands::compare(a),
        Command::Ppc(a) => commands::ppc(a),
        Command::Diagnose(a) => commands::diagnose(a),
    }
}
