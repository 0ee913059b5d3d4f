use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A three-level clustered ordinal dataset: regions contain families, families
/// contain individuals. Regions and families are densely indexed from zero;
/// outcomes are stored 1-based in `1..=n_categories`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_categories: usize,
    covariate_names: Vec<String>,
    region_names: Vec<String>,
    family_names: Vec<String>,
    family_region: Vec<usize>,
    obs_family: Vec<usize>,
    obs_region: Vec<usize>,
    outcomes: Vec<usize>,
    covariates: Vec<f64>,
}

impl Dataset {
    pub fn n_categories(&self) -> usize {
        self.n_categories
    }

    pub fn n_obs(&self) -> usize {
        self.outcomes.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn n_regions(&self) -> usize {
        self.region_names.len()
    }

    pub fn n_families(&self) -> usize {
        self.family_names.len()
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn region_names(&self) -> &[String] {
        &self.region_names
    }

    pub fn family_names(&self) -> &[String] {
        &self.family_names
    }

    /// Region index of each family.
    pub fn family_region(&self) -> &[usize] {
        &self.family_region
    }

    pub fn obs_family(&self) -> &[usize] {
        &self.obs_family
    }

    pub fn obs_region(&self) -> &[usize] {
        &self.obs_region
    }

    /// Outcomes in `1..=n_categories`.
    pub fn outcomes(&self) -> &[usize] {
        &self.outcomes
    }

    /// Covariate row of observation `n`.
    #[inline]
    pub fn row(&self, n: usize) -> &[f64] {
        let p = self.covariate_names.len();
        &self.covariates[n * p..(n + 1) * p]
    }

    /// Row-major `n_obs × n_covariates` design.
    pub fn design(&self) -> &[f64] {
        &self.covariates
    }

    /// Number of individuals in each family.
    pub fn family_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_families()];
        for &f in &self.obs_family {
            sizes[f] += 1;
        }
        sizes
    }

    /// Number of families in each region.
    pub fn region_family_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_regions()];
        for &r in &self.family_region {
            counts[r] += 1;
        }
        counts
    }

    /// A copy with the outcome vector replaced.
    pub fn with_outcomes(&self, outcomes: Vec<usize>) -> Result<Dataset> {
        if outcomes.len() != self.n_obs() {
            return Err(Error::Shape(format!(
                "{} outcomes for {} observations",
                outcomes.len(),
                self.n_obs()
            )));
        }
        check_outcomes(&outcomes, self.n_categories)?;
        Ok(Dataset {
            outcomes,
            ..self.clone()
        })
    }

    /// Hex SHA-256 over the dataset's content (indices, outcomes, exact
    /// covariate bits and names). Independent of on-disk formatting.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        let put_len = |h: &mut Sha256, n: usize| h.update((n as u64).to_le_bytes());
        put_len(&mut h, self.n_categories);
        for names in [&self.covariate_names, &self.region_names, &self.family_names] {
            put_len(&mut h, names.len());
            for name in names {
                put_len(&mut h, name.len());
                h.update(name.as_bytes());
            }
        }
        for &r in &self.family_region {
            put_len(&mut h, r);
        }
        put_len(&mut h, self.n_obs());
        for n in 0..self.n_obs() {
            put_len(&mut h, self.obs_family[n]);
            put_len(&mut h, self.outcomes[n]);
            for &x in self.row(n) {
                h.update(x.to_bits().to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn check_outcomes(outcomes: &[usize], n_categories: usize) -> Result<()> {
    if let Some((n, &y)) = outcomes
        .iter()
        .enumerate()
        .find(|(_, &y)| y < 1 || y > n_categories)
    {
        return Err(Error::Dataset(format!(
            "observation {} has outcome {y}, expected 1..={n_categories}",
            n + 1
        )));
    }
    Ok(())
}

/// Incremental construction of a [`Dataset`] from identifier strings.
///
/// Region and family identifiers are mapped to dense indices in order of
/// first appearance. A family identifier may belong to one region only.
#[derive(Debug, Clone)]
pub struct DatasetBuilder {
    n_categories: usize,
    covariate_names: Vec<String>,
    region_names: Vec<String>,
    region_index: std::collections::HashMap<String, usize>,
    family_names: Vec<String>,
    family_index: std::collections::HashMap<String, usize>,
    family_region: Vec<usize>,
    obs_family: Vec<usize>,
    outcomes: Vec<usize>,
    covariates: Vec<f64>,
}

impl DatasetBuilder {
    pub fn new(n_categories: usize, covariate_names: Vec<String>) -> Result<Self> {
        if n_categories < 2 {
            return Err(Error::Dataset(format!(
                "need at least 2 outcome categories, got {n_categories}"
            )));
        }
        Ok(DatasetBuilder {
            n_categories,
            covariate_names,
            region_names: Vec::new(),
            region_index: Default::default(),
            family_names: Vec::new(),
            family_index: Default::default(),
            family_region: Vec::new(),
            obs_family: Vec::new(),
            outcomes: Vec::new(),
            covariates: Vec::new(),
        })
    }

    /// Appends one individual. Errors name the offending identifier.
    pub fn push(&mut self, region: &str, family: &str, outcome: usize, row: &[f64]) -> Result<()> {
        if row.len() != self.covariate_names.len() {
            return Err(Error::Shape(format!(
                "covariate row has {} values, expected {}",
                row.len(),
                self.covariate_names.len()
            )));
        }
        if let Some(bad) = row.iter().position(|x| !x.is_finite()) {
            return Err(Error::Dataset(format!(
                "covariate `{}` is not finite",
                self.covariate_names[bad]
            )));
        }
        if outcome < 1 || outcome > self.n_categories {
            return Err(Error::Dataset(format!(
                "outcome {outcome} outside 1..={}",
                self.n_categories
            )));
        }
        let r = match self.region_index.get(region) {
            Some(&r) => r,
            None => {
                let r = self.region_names.len();
                self.region_names.push(region.to_owned());
                self.region_index.insert(region.to_owned(), r);
                r
            }
        };
        let f = match self.family_index.get(family) {
            Some(&f) => {
                if self.family_region[f] != r {
                    return Err(Error::Dataset(format!(
                        "family `{family}` appears under regions `{}` and `{region}`",
                        self.region_names[self.family_region[f]]
                    )));
                }
                f
            }
            None => {
                let f = self.family_names.len();
                self.family_names.push(family.to_owned());
                self.family_index.insert(family.to_owned(), f);
                self.family_region.push(r);
                f
            }
        };
        self.obs_family.push(f);
        self.outcomes.push(outcome);
        self.covariates.extend_from_slice(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn build(self) -> Dataset {
        let obs_region = self.obs_family.iter().map(|&f| self.family_region[f]).collect();
        Dataset {
            n_categories: self.n_categories,
            covariate_names: self.covariate_names,
            region_names: self.region_names,
            family_names: self.family_names,
            family_region: self.family_region,
            obs_family: self.obs_family,
            obs_region,
            outcomes: self.outcomes,
            covariates: self.covariates,
        }
    }
}
