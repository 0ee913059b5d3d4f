//! Synthetic three-level data with known parameters, for recovery studies.

use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetBuilder};
use crate::bridge::{Bridge, ModifiedBridge};
use crate::error::{Error, Result};
use crate::hmc::DrawsStore;
use crate::math::{logistic, quantile_nearest_rank, CompensatedSum};
use crate::model::{check_ordered, marginalize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum CovariateLaw {
    Normal { mean: f64, sd: f64 },
    Bernoulli { p: f64 },
}

impl CovariateLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match *self {
            CovariateLaw::Normal { mean, sd } => Ok(Normal::new(mean, sd)
                .map_err(|_| Error::Domain {
                    name: "sd",
                    value: sd,
                    domain: "[0, inf)",
                })?
                .sample(rng)),
            CovariateLaw::Bernoulli { p } => {
                let b = Bernoulli::new(p).map_err(|_| Error::Domain {
                    name: "p",
                    value: p,
                    domain: "[0, 1]",
                })?;
                Ok(f64::from(u8::from(b.sample(rng))))
            }
        }
    }
}

/// Ground truth and design of a synthetic study. Each region holds
/// `families_per_region` families whose sizes are uniform on
/// `family_size_min..=family_size_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueParams {
    pub alpha_c: Vec<f64>,
    pub beta_c: Vec<f64>,
    pub phi_ustar: f64,
    pub phi_v: f64,
    pub n_regions: usize,
    pub families_per_region: usize,
    pub family_size_min: usize,
    pub family_size_max: usize,
    pub covariates: Vec<CovariateLaw>,
}

impl TrueParams {
    /// The recovery fixture: 15 regions of 40 families with 2 to 4 members,
    /// three covariates.
    pub fn recovery_fixture() -> Self {
        TrueParams {
            alpha_c: vec![-0.3, 1.5],
            beta_c: vec![0.5, -0.8, 1.2],
            phi_ustar: 0.9,
            phi_v: 0.8,
            n_regions: 15,
            families_per_region: 40,
            family_size_min: 2,
            family_size_max: 4,
            covariates: vec![
                CovariateLaw::Normal { mean: 0.0, sd: 1.0 },
                CovariateLaw::Bernoulli { p: 0.4 },
                CovariateLaw::Normal { mean: 0.0, sd: 1.0 },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_ordered(&self.alpha_c)?;
        if self.beta_c.len() != self.covariates.len() {
            return Err(Error::Shape(format!(
                "{} coefficients for {} covariate laws",
                self.beta_c.len(),
                self.covariates.len()
            )));
        }
        if let Some(b) = self.beta_c.iter().find(|b| !b.is_finite()) {
            return Err(Error::NonFinite { name: "beta_c", value: *b });
        }
        Bridge::new(self.phi_ustar)?;
        Bridge::new(self.phi_v)?;
        if self.n_regions == 0 || self.families_per_region == 0 {
            return Err(Error::Dataset("need at least one region and one family per region".into()));
        }
        if self.family_size_min == 0 || self.family_size_min > self.family_size_max {
            return Err(Error::Dataset(format!(
                "family size range {}..={} is empty or includes zero",
                self.family_size_min, self.family_size_max
            )));
        }
        Ok(())
    }

    pub fn n_categories(&self) -> usize {
        self.alpha_c.len() + 1
    }

    pub fn covariate_names(&self) -> Vec<String> {
        (1..=self.covariates.len()).map(|k| format!("x{k}")).collect()
    }

    /// `(α^m, β^m)` implied by the truth.
    pub fn marginal(&self) -> (Vec<f64>, Vec<f64>) {
        marginalize(&self.alpha_c, &self.beta_c, self.phi_ustar, self.phi_v)
            .expect("phi values validated")
    }
}

/// Generated data alongside the realized effects.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub data: Dataset,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Simulates regions, families and individuals:
/// `U_i ~ ModifiedBridge(φ_U*, φ_V)`, `V_ij ~ Bridge(φ_V)`, covariates from
/// their laws and outcomes from the cumulative-logit model.
pub fn generate<R: Rng + ?Sized>(truth: &TrueParams, rng: &mut R) -> Result<Generated> {
    truth.validate()?;
    let region_law = ModifiedBridge::new(truth.phi_ustar, truth.phi_v)?;
    let family_law = Bridge::new(truth.phi_v)?;
    let mut builder = DatasetBuilder::new(truth.n_categories(), truth.covariate_names())?;
    let (mut u, mut v) = (Vec::new(), Vec::new());
    let width = |n: usize| n.to_string().len();
    let (rw, fw) = (width(truth.n_regions), width(truth.families_per_region));
    let mut x = vec![0.0; truth.covariates.len()];
    for i in 0..truth.n_regions {
        let region = format!("R{:0rw$}", i + 1);
        let ui = region_law.sample(rng);
        u.push(ui);
        for j in 0..truth.families_per_region {
            let family = format!("{region}-F{:0fw$}", j + 1);
            let vij = family_law.sample(rng);
            v.push(vij);
            let size = rng.random_range(truth.family_size_min..=truth.family_size_max);
            for _ in 0..size {
                for (xk, law) in x.iter_mut().zip(&truth.covariates) {
                    *xk = law.sample(rng)?;
                }
                let eta = x.iter().zip(&truth.beta_c).map(|(a, b)| a * b).sum::<f64>() + ui + vij;
                let p: f64 = rng.random();
                let y = 1 + truth.alpha_c.iter().take_while(|&&a| p >= logistic(a - eta)).count();
                builder.push(&region, &family, y, &x)?;
            }
        }
    }
    Ok(Generated {
        data: builder.build(),
        u,
        v,
    })
}

/// Everything needed to score a fit against the generating truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthManifest {
    pub truth: TrueParams,
    pub seed: u64,
    pub dataset_hash: String,
    pub alpha_m: Vec<f64>,
    pub beta_m: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl TruthManifest {
    pub fn new(truth: &TrueParams, seed: u64, generated: &Generated) -> Self {
        let (alpha_m, beta_m) = truth.marginal();
        TruthManifest {
            truth: truth.clone(),
            seed,
            dataset_hash: generated.data.content_hash(),
            alpha_m,
            beta_m,
            u: generated.u.clone(),
            v: generated.v.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// `(name, true value)` for the marginal coefficients and both φ.
    pub fn headline(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = self
            .alpha_m
            .iter()
            .enumerate()
            .map(|(k, &a)| (format!("alpha_m[{}]", k + 1), a))
            .collect();
        out.extend(self.beta_m.iter().enumerate().map(|(k, &b)| (format!("beta_m[{}]", k + 1), b)));
        out.push(("phi_ustar".into(), self.truth.phi_ustar));
        out.push(("phi_v".into(), self.truth.phi_v));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryRow {
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    pub q025: f64,
    pub q975: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport {
    pub rows: Vec<RecoveryRow>,
    /// Fraction of region / family effects whose 95% interval covers the
    /// realized value (`None` when the store has no such effects).
    pub u_coverage: Option<f64>,
    pub v_coverage: Option<f64>,
}

impl RecoveryReport {
    pub fn all_covered(&self) -> bool {
        self.rows.iter().all(|r| r.covered)
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "{:<14} {:>10} {:>10} {:>10} {:>10} {:>8}\n",
            "name", "truth", "mean", "2.5%", "97.5%", "covered"
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{:<14} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>8}\n",
                r.name, r.truth, r.mean, r.q025, r.q975, r.covered
            ));
        }
        if let Some(c) = self.u_coverage {
            s.push_str(&format!("region effect coverage {:.3}\n", c));
        }
        if let Some(c) = self.v_coverage {
            s.push_str(&format!("family effect coverage {:.3}\n", c));
        }
        s
    }
}

fn interval(pooled: &[f64]) -> (f64, f64, f64) {
    let mut sorted = pooled.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = pooled.iter().copied().collect::<CompensatedSum>().value() / pooled.len() as f64;
    (
        mean,
        quantile_nearest_rank(&sorted, 0.025),
        quantile_nearest_rank(&sorted, 0.975),
    )
}

/// Checks whether the central 95% posterior intervals in `store` cover the
/// marginal coefficients, both φ and the realized effects.
pub fn score_recovery(manifest: &TruthManifest, store: &DrawsStore) -> Result<RecoveryReport> {
    if store.n_draws() == 0 {
        return Err(Error::DrawsFormat("no retained draws".into()));
    }
    let mut rows = Vec::new();
    for (name, truth) in manifest.headline() {
        let Some(i) = store.index_of(&name) else {
            continue;
        };
        let (mean, q025, q975) = interval(&store.pooled(i));
        rows.push(RecoveryRow {
            covered: q025 <= truth && truth <= q975,
            name,
            truth,
            mean,
            q025,
            q975,
        });
    }
    if rows.is_empty() {
        return Err(Error::DrawsFormat("draws contain none of the scored quantities".into()));
    }
    let coverage = |prefix: &str, truth: &[f64]| -> Option<f64> {
        let idx: Vec<usize> = (1..=truth.len())
            .map_while(|k| store.index_of(&format!("{prefix}[{k}]")))
            .collect();
        if idx.len() != truth.len() || truth.is_empty() {
            return None;
        }
        let hit = idx
            .iter()
            .zip(truth)
            .filter(|(&i, &t)| {
                let (_, lo, hi) = interval(&store.pooled(i));
                lo <= t && t <= hi
            })
            .count();
        Some(hit as f64 / truth.len() as f64)
    };
    Ok(RecoveryReport {
        rows,
        u_coverage: coverage("u", &manifest.u),
        v_coverage: coverage("v", &manifest.v),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge::bridge_variance;
    use crate::hmc::IterStats;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fixture_counts() {
        let truth = TrueParams::recovery_fixture();
        let g = generate(&truth, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(g.data.n_regions(), 15);
        assert_eq!(g.data.n_families(), 600);
        assert!(g.data.family_sizes().iter().all(|&n| (2..=4).contains(&n)));
        assert!((1500..=2100).contains(&g.data.n_obs()));
        assert_eq!((g.u.len(), g.v.len()), (15, 600));
    }

    #[test]
    fn negligible_effects_give_closed_form_frequencies() {
        let truth = TrueParams {
            alpha_c: vec![0.0, 1.0],
            beta_c: vec![],
            phi_ustar: 1.0 - 1e-9,
            phi_v: 1.0 - 1e-9,
            n_regions: 10,
            families_per_region: 1000,
            family_size_min: 10,
            family_size_max: 10,
            covariates: vec![],
        };
        let g = generate(&truth, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let n = g.data.n_obs() as f64;
        let freq = |a: usize| g.data.outcomes().iter().filter(|&&y| y == a).count() as f64 / n;
        let l1 = logistic(1.0);
        for (a, p) in [(1, 0.5), (2, l1 - 0.5), (3, 1.0 - l1)] {
            let se = (p * (1.0 - p) / n).sqrt();
            assert!((freq(a) - p).abs() < 4.0 * se, "category {a}: {} vs {p}", freq(a));
        }
    }

    #[test]
    fn family_effect_variance() {
        let truth = TrueParams {
            alpha_c: vec![0.0],
            beta_c: vec![],
            phi_ustar: 0.9,
            phi_v: 0.8,
            n_regions: 1,
            families_per_region: 5000,
            family_size_min: 1,
            family_size_max: 1,
            covariates: vec![],
        };
        let g = generate(&truth, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let var = crate::math::sample_variance(&g.v);
        let expected = bridge_variance(0.8).unwrap();
        assert!((var / expected - 1.0).abs() < 0.05, "{var} vs {expected}");
    }

    #[test]
    fn deterministic_given_seed() {
        let truth = TrueParams::recovery_fixture();
        let a = generate(&truth, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = generate(&truth, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn manifest_round_trip_and_scoring() {
        let truth = TrueParams::recovery_fixture();
        let g = generate(&truth, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let m = TruthManifest::new(&truth, 4, &g);
        let back = TruthManifest::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);

        // A store whose draws scatter around the truth covers it.
        let headline = m.headline();
        let names: Vec<String> = headline.iter().map(|(n, _)| n.clone()).collect();
        let mut values = Vec::new();
        for d in 0..100 {
            let offset = (d as f64 - 49.5) / 100.0;
            values.extend(headline.iter().map(|(_, t)| t + offset * 0.1));
        }
        let stats = vec![IterStats::from_values([0.0; 7]); 100];
        let store = DrawsStore::new(names, 1, 100, values, stats).unwrap();
        let report = score_recovery(&m, &store).unwrap();
        assert!(report.all_covered());
        assert_eq!(report.rows.len(), 7);
        assert_eq!(report.v_coverage, None);
    }

    #[test]
    fn invalid_truth_is_rejected() {
        let mut t = TrueParams::recovery_fixture();
        t.alpha_c = vec![1.0, 0.0];
        assert!(t.validate().is_err());
        let mut t = TrueParams::recovery_fixture();
        t.phi_v = 1.2;
        assert!(t.validate().is_err());
        let mut t = TrueParams::recovery_fixture();
        t.covariates.pop();
        assert!(t.validate().is_err());
    }
}
