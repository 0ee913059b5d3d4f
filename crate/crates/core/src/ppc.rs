//! Posterior predictive checks: one replicated outcome vector per retained
//! draw, scored by the signed difference between observed and simulated
//! categories.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::hmc::DrawsStore;
use crate::math::{logistic, Summary};
use crate::model::{linear_predictor, ConstrainedParams, DrawIndex, ModelSpec};

/// Draws one outcome per observation from the model at `cp`, reusing the
/// effects carried by `cp`.
pub fn simulate_replicate<R: Rng + ?Sized>(
    cp: &ConstrainedParams,
    data: &Dataset,
    spec: &ModelSpec,
    rng: &mut R,
) -> Result<Vec<usize>> {
    cp.check_thresholds()?;
    if cp.alpha_c.len() != spec.n_thresholds() {
        return Err(Error::Shape(format!(
            "{} thresholds for {} categories",
            cp.alpha_c.len(),
            spec.n_categories
        )));
    }
    let regions = data.obs_region();
    let families = data.obs_family();
    (0..data.n_obs())
        .map(|n| {
            let eta = linear_predictor(cp, data.row(n), regions[n], families[n], spec)?;
            let u: f64 = rng.random();
            // Inverse CDF over the cumulative probabilities logistic(α_a − η).
            Ok(1 + cp.alpha_c.iter().take_while(|&&a| u >= logistic(a - eta)).count())
        })
        .collect()
}

/// `observed − simulated`, both 1-based categories in `1..=n_categories`.
pub fn diff_code(observed: usize, simulated: usize, n_categories: usize) -> Result<i64> {
    for (what, y) in [("observed", observed), ("simulated", simulated)] {
        if y < 1 || y > n_categories {
            return Err(Error::Shape(format!(
                "{what} category {y} outside 1..={n_categories}"
            )));
        }
    }
    Ok(observed as i64 - simulated as i64)
}

/// Distribution over replicates of the percentage of observations falling
/// in each difference code.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffTable {
    pub codes: Vec<i64>,
    pub rows: Vec<Summary>,
    /// `[replicate][code]` percentages.
    pub percentages: Vec<Vec<f64>>,
}

impl DiffTable {
    /// Whitespace-aligned table with one row per code.
    pub fn render(&self) -> String {
        let mut s = format!("{:>5} {:>10} {:>10} {:>10} {:>10}\n", "diff", "mean", "sd", "2.5%", "97.5%");
        for (code, r) in self.codes.iter().zip(&self.rows) {
            let _ = writeln!(
                s,
                "{:>5} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
                code, r.mean, r.sd, r.q025, r.q975
            );
        }
        s
    }

    pub fn row(&self, code: i64) -> Option<&Summary> {
        self.codes.iter().position(|&c| c == code).map(|i| &self.rows[i])
    }
}

/// Per-code percentages for one replicate.
pub fn code_percentages(observed: &[usize], simulated: &[usize], n_categories: usize) -> Result<(Vec<i64>, Vec<f64>)> {
    let reach = (n_categories as i64 - 1).max(2);
    let codes: Vec<i64> = (-reach..=reach).collect();
    let mut counts = vec![0usize; codes.len()];
    for (&o, &s) in observed.iter().zip(simulated) {
        counts[(diff_code(o, s, n_categories)? + reach) as usize] += 1;
    }
    let n = observed.len().max(1) as f64;
    Ok((codes, counts.into_iter().map(|c| 100.0 * c as f64 / n).collect()))
}

/// Simulates one replicate per retained draw (draw `l` uses ChaCha8 stream
/// `l` of `seed`) and summarizes the difference-code percentages.
pub fn ppc_report(store: &DrawsStore, data: &Dataset, spec: &ModelSpec, seed: u64) -> Result<DiffTable> {
    if store.n_draws() == 0 {
        return Err(Error::DrawsFormat("no retained draws".into()));
    }
    let index = DrawIndex::new(store.names(), spec, data.n_regions(), data.n_families())?;
    let draws: Vec<&[f64]> = store.draws().collect();
    let per_draw = draws
        .par_iter()
        .enumerate()
        .map(|(l, d)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(l as u64);
            let sim = simulate_replicate(&index.params(d), data, spec, &mut rng)?;
            code_percentages(data.outcomes(), &sim, spec.n_categories)
        })
        .collect::<Result<Vec<_>>>()?;
    let codes = per_draw[0].0.clone();
    let percentages: Vec<Vec<f64>> = per_draw.into_iter().map(|(_, p)| p).collect();
    let rows = (0..codes.len())
        .map(|k| Summary::of(&percentages.iter().map(|p| p[k]).collect::<Vec<_>>()))
        .collect();
    Ok(DiffTable {
        codes,
        rows,
        percentages,
    })
}
