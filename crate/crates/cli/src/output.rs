use std::fmt::Write as _;
use std::path::Path;

use ordbridge_core::data::{load, load_draws, write_atomic, EncodingPlan, LoadReport};
use ordbridge_core::hmc::{summarize, ParamSummary};
use ordbridge_core::{Dataset, DrawsStore, Level, ModelSpec};

use crate::error::{CliError, CliResult};

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    Ok(write_atomic(path, text.as_bytes())?)
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Fixed six decimals; non-finite values as `NA`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        "NA".into()
    }
}

pub fn load_dataset(data: &Path, encoding: Option<&Path>) -> CliResult<(Dataset, LoadReport, EncodingPlan)> {
    let plan = match encoding {
        Some(p) => EncodingPlan::from_file(p)?,
        None => EncodingPlan::default(),
    };
    let (d, report) = load(data, &plan)?;
    Ok((d, report, plan))
}

pub fn load_store(path: &Path) -> CliResult<DrawsStore> {
    Ok(load_draws(path)?)
}

pub fn require_draws(store: &DrawsStore) -> CliResult<()> {
    if store.n_draws() == 0 {
        return Err(CliError::Validation("no retained draws".into()));
    }
    Ok(())
}

/// Model level recorded by `fit`.
pub fn store_level(store: &DrawsStore, path: &Path) -> CliResult<Level> {
    let raw = store
        .attrs
        .get("model")
        .ok_or_else(|| CliError::Validation(format!("{}: draws carry no model level", path.display())))?;
    Ok(raw.parse()?)
}

/// Refuses draws fitted to a different dataset.
pub fn check_same_data(store: &DrawsStore, path: &Path, data: &Dataset) -> CliResult<ModelSpec> {
    let hash = data.content_hash();
    match store.attrs.get("dataset_hash") {
        Some(h) if *h == hash => {}
        Some(h) => {
            return Err(CliError::Validation(format!(
                "{} was fitted to dataset {h}, but the given dataset hashes to {hash}",
                path.display()
            )))
        }
        None => {
            return Err(CliError::Validation(format!(
                "{} records no dataset hash (given dataset hashes to {hash})",
                path.display()
            )))
        }
    }
    Ok(ModelSpec::new(data.n_categories(), data.n_covariates(), store_level(store, path)?)?)
}

pub fn is_headline(name: &str, conditional: bool) -> bool {
    name.starts_with("alpha_m[")
        || name.starts_with("beta_m[")
        || name == "phi_ustar"
        || name == "phi_v"
        || (conditional && (name.starts_with("alpha_c[") || name.starts_with("beta_c[")))
}

pub fn is_effect(name: &str) -> bool {
    name.starts_with("u[") || name.starts_with("v[")
}

pub fn summary_csv(store: &DrawsStore, conditional: bool) -> String {
    let mut s = String::from("name,mean,sd,q2.5,q97.5\n");
    for p in summarize(store, |n| is_headline(n, conditional)) {
        let m = p.summary;
        let _ = writeln!(s, "{},{},{},{},{}", p.name, num(m.mean), num(m.sd), num(m.q025), num(m.q975));
    }
    s
}

pub fn summary_table(store: &DrawsStore, conditional: bool) -> String {
    let mut s = format!("{:<14} {:>10} {:>10} {:>10} {:>10}\n", "", "mean", "sd", "2.5%", "97.5%");
    for p in summarize(store, |n| is_headline(n, conditional)) {
        let m = p.summary;
        let _ = writeln!(s, "{:<14} {:>10.4} {:>10.4} {:>10.4} {:>10.4}", p.name, m.mean, m.sd, m.q025, m.q975);
    }
    s
}

pub const RHAT_FLAG: f64 = 1.01;

pub fn flagged(p: &ParamSummary) -> bool {
    !matches!(p.rhat, Ok(r) if r <= RHAT_FLAG)
}

pub fn diagnostics_csv(rows: &[ParamSummary]) -> String {
    let mut s = String::from("name,rhat,ess,flag\n");
    for p in rows {
        let rhat = p.rhat.as_ref().map_or("NA".into(), |r| num(*r));
        let ess = p.ess.as_ref().map_or("NA".into(), |e| num(*e));
        let flag = match &p.rhat {
            Ok(r) if *r <= RHAT_FLAG => String::new(),
            Ok(_) => "rhat>1.01".into(),
            Err(e) => e.to_string(),
        };
        let _ = writeln!(s, "{},{rhat},{ess},{flag}", p.name);
    }
    s
}

/// `key = value` lines.
#[derive(Default)]
pub struct Manifest(Vec<(String, String)>);

impl Manifest {
    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.0.push((key.to_owned(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.0 {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

pub fn file_label(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}
