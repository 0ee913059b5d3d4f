use std::fmt::Write as _;
use std::time::Instant;

use ordbridge_core::data::{save_draws, DrawsFormat};
use ordbridge_core::hmc::{run_chains, summarize};
use ordbridge_core::math::Summary;
use ordbridge_core::model::{effect_interpretation, EffectScale};
use ordbridge_core::{Dataset, DrawsStore, Level, ModelSpec, Posterior};

use crate::error::CliResult;
use crate::output::{diagnostics_csv, ensure_dir, file_label, load_dataset, num, summary_csv, summary_table, write_text, Manifest};
use crate::FitArgs;

/// Relative change used for log-scale covariates in `odds.csv`.
const LOG_COVARIATE_STEP: f64 = 1.1;

pub fn fit(args: &FitArgs) -> CliResult<()> {
    let config = args.sampler.config()?;
    let (data, report, plan) = load_dataset(&args.data.data, args.data.encoding.as_deref())?;
    let level = Level::from(args.model);
    let spec = ModelSpec::new(data.n_categories(), data.n_covariates(), level)?;
    let post = Posterior::new(&data, spec)?;

    let started = Instant::now();
    let mut store = run_chains(&post, &config)?;
    eprintln!("sampling took {:.1}s", started.elapsed().as_secs_f64());
    store.attrs.insert("model".into(), level.to_string());
    store.attrs.insert("dataset_hash".into(), data.content_hash());
    store.attrs.insert("n_categories".into(), data.n_categories().to_string());

    let out = &args.out;
    ensure_dir(out)?;
    let (draws_name, format) = if args.binary {
        ("draws.bin", DrawsFormat::Binary)
    } else {
        ("draws.csv", DrawsFormat::Text)
    };
    save_draws(&store, &out.join(draws_name), format)?;
    write_text(&out.join("summary.csv"), &summary_csv(&store, args.conditional_scale))?;
    write_text(&out.join("diagnostics.csv"), &diagnostics_csv(&summarize(&store, |_| true)))?;
    write_text(&out.join("mappings.csv"), &mappings_csv(&data))?;
    write_text(&out.join("odds.csv"), &odds_csv(&store, &data))?;
    write_text(&out.join("data_report.txt"), &report.render())?;
    if !plan.columns.is_empty() || plan.outcome.is_some() {
        write_text(&out.join("encoding.txt"), &plan.to_text())?;
    }
    if spec.level.has_region_effects() {
        write_text(&out.join("effects_region.csv"), &effects_csv(&store, "u", data.region_names()))?;
    }
    if spec.level.has_family_effects() {
        write_text(&out.join("effects_family.csv"), &effects_csv(&store, "v", data.family_names()))?;
    }

    let depth_hits = store.n_saturated(config.max_tree_depth);
    let mut m = Manifest::default();
    m.set("command", "fit")
        .set("version", env!("CARGO_PKG_VERSION"))
        .set("data", args.data.data.display())
        .set("encoding", args.data.encoding.as_ref().map_or("none".into(), |p| p.display().to_string()))
        .set("dataset_hash", data.content_hash())
        .set("model", level)
        .set("chains", config.n_chains)
        .set("iters", config.n_iterations)
        .set("warmup", config.n_warmup)
        .set("target_accept", config.target_accept)
        .set("max_depth", config.max_tree_depth)
        .set("seed", config.seed)
        .set("n_obs", data.n_obs())
        .set("n_regions", data.n_regions())
        .set("n_families", data.n_families())
        .set("n_draws", store.n_draws())
        .set("divergent", store.n_divergent())
        .set("max_depth_hits", depth_hits)
        .set("draws", file_label(&out.join(draws_name)));
    write_text(&out.join("manifest.txt"), &m.render())?;

    print!("{}", summary_table(&store, args.conditional_scale));
    if store.n_divergent() > 0 || depth_hits > 0 {
        eprintln!(
            "warning: {} divergent transitions, {} at maximum tree depth",
            store.n_divergent(),
            depth_hits
        );
    }
    Ok(())
}

fn mappings_csv(data: &Dataset) -> String {
    let mut s = String::from("name,label\n");
    for (k, c) in data.covariate_names().iter().enumerate() {
        let _ = writeln!(s, "beta_m[{}],{c}", k + 1);
    }
    for (i, r) in data.region_names().iter().enumerate() {
        let _ = writeln!(s, "u[{}],{r}", i + 1);
    }
    for (j, f) in data.family_names().iter().enumerate() {
        let _ = writeln!(s, "v[{}],{f}", j + 1);
    }
    s
}

/// Per-effect means and central 95% intervals, sorted by mean.
fn effects_csv(store: &DrawsStore, prefix: &str, labels: &[String]) -> String {
    let mut rows: Vec<(String, &str, Summary)> = labels
        .iter()
        .enumerate()
        .filter_map(|(k, label)| {
            let name = format!("{prefix}[{}]", k + 1);
            let i = store.index_of(&name)?;
            Some((name, label.as_str(), Summary::of(&store.pooled(i))))
        })
        .collect();
    rows.sort_by(|a, b| a.2.mean.total_cmp(&b.2.mean).then_with(|| a.0.cmp(&b.0)));
    let mut s = String::from("rank,name,label,mean,q2.5,q97.5\n");
    for (r, (name, label, m)) in rows.iter().enumerate() {
        let _ = writeln!(s, "{},{name},{label},{},{},{}", r + 1, num(m.mean), num(m.q025), num(m.q975));
    }
    s
}

/// Percent change in the odds of a higher category per unit covariate
/// change (per 10% increase for `log(..)` columns), at the posterior mean
/// and interval ends of each marginal coefficient.
fn odds_csv(store: &DrawsStore, data: &Dataset) -> String {
    let mut s = String::from("name,label,scale,pct_change,pct_q2.5,pct_q97.5\n");
    for (k, label) in data.covariate_names().iter().enumerate() {
        let Some(i) = store.index_of(&format!("beta_m[{}]", k + 1)) else {
            continue;
        };
        let m = Summary::of(&store.pooled(i));
        let (scale, tag) = if label.starts_with("log(") {
            (EffectScale::LogCovariatePercent(LOG_COVARIATE_STEP), "per 10% increase")
        } else {
            (EffectScale::OddsPercent, "per unit")
        };
        let _ = writeln!(
            s,
            "beta_m[{}],{label},{tag},{},{},{}",
            k + 1,
            num(effect_interpretation(m.mean, scale)),
            num(effect_interpretation(m.q025, scale)),
            num(effect_interpretation(m.q975, scale))
        );
    }
    s
}
