use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::adapt::WindowedAdaptation;
use super::integrator::PhasePoint;
use super::nuts::Nuts;
use super::{LogDensity, SamplerConfig};
use crate::error::{Error, Result};

const INIT_RADIUS: f64 = 2.0;
const INIT_ATTEMPTS: usize = 100;
const MIN_STEP_SIZE: f64 = 1e-12;

/// Sampler statistics for one retained iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterStats {
    pub divergent: bool,
    pub tree_depth: usize,
    pub step_size: f64,
    pub accept_stat: f64,
    pub n_leapfrog: usize,
    pub energy: f64,
    pub log_density: f64,
}

/// Reserved names of the per-iteration statistics in serialized stores.
pub const STAT_NAMES: [&str; 7] = [
    "__divergent",
    "__treedepth",
    "__stepsize",
    "__accept_stat",
    "__n_leapfrog",
    "__energy",
    "__lp",
];

impl IterStats {
    pub fn values(&self) -> [f64; 7] {
        [
            f64::from(u8::from(self.divergent)),
            self.tree_depth as f64,
            self.step_size,
            self.accept_stat,
            self.n_leapfrog as f64,
            self.energy,
            self.log_density,
        ]
    }

    pub fn from_values(v: [f64; 7]) -> Self {
        IterStats {
            divergent: v[0] != 0.0,
            tree_depth: v[1] as usize,
            step_size: v[2],
            accept_stat: v[3],
            n_leapfrog: v[4] as usize,
            energy: v[5],
            log_density: v[6],
        }
    }
}

/// Retained draws of every recorded quantity, chain-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawsStore {
    names: Vec<String>,
    n_chains: usize,
    n_retained: usize,
    /// `[chain][iteration][quantity]`.
    values: Vec<f64>,
    /// `[chain][iteration]`.
    stats: Vec<IterStats>,
    /// Free-form provenance (model level, seed, dataset hash, ...).
    pub attrs: BTreeMap<String, String>,
}

impl DrawsStore {
    pub fn new(
        names: Vec<String>,
        n_chains: usize,
        n_retained: usize,
        values: Vec<f64>,
        stats: Vec<IterStats>,
    ) -> Result<Self> {
        if values.len() != n_chains * n_retained * names.len() || stats.len() != n_chains * n_retained {
            return Err(Error::Shape(format!(
                "store of {n_chains} chains x {n_retained} draws x {} quantities given {} values and {} stat rows",
                names.len(),
                values.len(),
                stats.len()
            )));
        }
        Ok(DrawsStore {
            names,
            n_chains,
            n_retained,
            values,
            stats,
            attrs: BTreeMap::new(),
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_chains(&self) -> usize {
        self.n_chains
    }

    pub fn n_retained(&self) -> usize {
        self.n_retained
    }

    /// Total retained draws over all chains.
    pub fn n_draws(&self) -> usize {
        self.n_chains * self.n_retained
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// All quantities for one draw.
    pub fn draw(&self, chain: usize, iter: usize) -> &[f64] {
        let k = self.names.len();
        let start = (chain * self.n_retained + iter) * k;
        &self.values[start..start + k]
    }

    /// Draws flattened over chains in chain-major order.
    pub fn draws(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.names.len().max(1)).take(self.n_draws())
    }

    pub fn stats(&self, chain: usize, iter: usize) -> &IterStats {
        &self.stats[chain * self.n_retained + iter]
    }

    pub fn all_stats(&self) -> &[IterStats] {
        &self.stats
    }

    /// Per-chain series of quantity `index`.
    pub fn chains_of(&self, index: usize) -> Vec<Vec<f64>> {
        (0..self.n_chains)
            .map(|c| (0..self.n_retained).map(|i| self.draw(c, i)[index]).collect())
            .collect()
    }

    /// Quantity `index` pooled over chains.
    pub fn pooled(&self, index: usize) -> Vec<f64> {
        self.draws().map(|d| d[index]).collect()
    }

    pub fn n_divergent(&self) -> usize {
        self.stats.iter().filter(|s| s.divergent).count()
    }

    pub fn n_saturated(&self, max_depth: usize) -> usize {
        self.stats.iter().filter(|s| s.tree_depth >= max_depth).count()
    }
}

struct ChainOutput {
    values: Vec<f64>,
    stats: Vec<IterStats>,
}

fn initial_point<T: LogDensity + ?Sized>(target: &T, rng: &mut ChaCha8Rng, chain: usize) -> Result<PhasePoint> {
    let dim = target.dim();
    for _ in 0..INIT_ATTEMPTS {
        let q: Vec<f64> = (0..dim).map(|_| rng.random_range(-INIT_RADIUS..INIT_RADIUS)).collect();
        let z = PhasePoint::new(target, q);
        if z.log_density.is_finite() && z.grad.iter().all(|g| g.is_finite()) {
            return Ok(z);
        }
    }
    Err(Error::Sampling(format!(
        "chain {}: no finite starting point in {INIT_ATTEMPTS} attempts",
        chain + 1
    )))
}

/// Result of warmup for one chain: frozen step size and inverse metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Adapted {
    pub step_size: f64,
    pub inv_mass: Vec<f64>,
}

fn chain_rng(config: &SamplerConfig, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(chain as u64);
    rng
}

fn warmup<T: LogDensity + ?Sized>(
    target: &T,
    config: &SamplerConfig,
    chain: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Nuts, PhasePoint)> {
    let dim = target.dim();
    let mut z = initial_point(target, rng, chain)?;
    let mut nuts = Nuts::new(dim, 1.0, config.max_tree_depth, config.max_delta_h);
    nuts.init_step_size(&z, target, rng)?;
    let mut adaptation = WindowedAdaptation::new(dim, config.n_warmup, config.target_accept, nuts.step_size);
    for iter in 0..config.n_warmup {
        let (next, s) = nuts.transition(&z, target, rng);
        z = next;
        nuts.step_size = adaptation.step.update(s.accept_stat);
        if let Some(var) = adaptation.learn_metric(&z.q) {
            nuts.inv_mass = var;
            nuts.init_step_size(&z, target, rng)?;
            adaptation.step.restart(nuts.step_size);
        }
        if iter + 1 == config.n_warmup {
            nuts.step_size = adaptation.step.final_step_size();
        }
        if !(nuts.step_size >= MIN_STEP_SIZE && nuts.step_size.is_finite()) {
            return Err(Error::Sampling(format!(
                "chain {}: step size collapsed to {:e} at warmup iteration {}",
                chain + 1,
                nuts.step_size,
                iter + 1
            )));
        }
    }
    Ok((nuts, z))
}

/// Runs only the warmup phase of chain `chain` and returns the adapted
/// sampler settings.
pub fn adapt<T: LogDensity + ?Sized>(target: &T, config: &SamplerConfig, chain: usize) -> Result<Adapted> {
    config.validate()?;
    let mut rng = chain_rng(config, chain);
    let (nuts, _) = warmup(target, config, chain, &mut rng)?;
    Ok(Adapted {
        step_size: nuts.step_size,
        inv_mass: nuts.inv_mass,
    })
}

fn run_chain<T: LogDensity + ?Sized>(target: &T, config: &SamplerConfig, chain: usize) -> Result<ChainOutput> {
    let mut rng = chain_rng(config, chain);
    let n_out = target.output_names().len();
    let (nuts, mut z) = warmup(target, config, chain, &mut rng)?;

    let mut values = Vec::with_capacity(config.n_retained() * n_out);
    let mut stats = Vec::with_capacity(config.n_retained());
    for _ in config.n_warmup..config.n_iterations {
        let (next, s) = nuts.transition(&z, target, &mut rng);
        z = next;
        let before = values.len();
        target.write_outputs(&z.q, &mut values);
        if values.len() - before != n_out {
            return Err(Error::Shape(format!(
                "target wrote {} outputs, declared {n_out}",
                values.len() - before
            )));
        }
        stats.push(IterStats {
            divergent: s.divergent,
            tree_depth: s.tree_depth,
            step_size: s.step_size,
            accept_stat: s.accept_stat,
            n_leapfrog: s.n_leapfrog,
            energy: s.energy,
            log_density: z.log_density,
        });
    }
    Ok(ChainOutput { values, stats })
}

/// Runs `config.n_chains` independent chains in parallel. Chain `c` draws
/// from the ChaCha8 stream `c` of `config.seed`, so results do not depend on
/// thread scheduling.
///
/// Fails if any chain has more than `config.max_divergent_fraction` of its
/// retained transitions divergent.
pub fn run_chains<T: LogDensity + ?Sized>(target: &T, config: &SamplerConfig) -> Result<DrawsStore> {
    config.validate()?;
    let outputs: Vec<Result<ChainOutput>> = (0..config.n_chains)
        .into_par_iter()
        .map(|c| run_chain(target, config, c))
        .collect();
    let outputs = outputs.into_iter().collect::<Result<Vec<_>>>()?;

    let retained = config.n_retained();
    let limit = config.max_divergent_fraction * retained as f64;
    let bad: Vec<String> = outputs
        .iter()
        .enumerate()
        .filter_map(|(c, o)| {
            let n = o.stats.iter().filter(|s| s.divergent).count();
            (n as f64 > limit).then(|| format!("chain {}: {n}/{retained} divergent", c + 1))
        })
        .collect();
    if !bad.is_empty() {
        return Err(Error::Sampling(format!(
            "too many divergent transitions ({})",
            bad.join("; ")
        )));
    }

    let mut values = Vec::with_capacity(outputs.iter().map(|o| o.values.len()).sum());
    let mut stats = Vec::with_capacity(config.n_chains * retained);
    for o in outputs {
        values.extend(o.values);
        stats.extend(o.stats);
    }
    let mut store = DrawsStore::new(target.output_names(), config.n_chains, retained, values, stats)?;
    store.attrs.insert("seed".into(), config.seed.to_string());
    store.attrs.insert("n_warmup".into(), config.n_warmup.to_string());
    store.attrs.insert("n_iterations".into(), config.n_iterations.to_string());
    store.attrs.insert("target_accept".into(), format!("{:?}", config.target_accept));
    store.attrs.insert("max_tree_depth".into(), config.max_tree_depth.to_string());
    Ok(store)
}
