use std::fmt::Write as _;

use ordbridge_core::hmc::summarize;
use ordbridge_core::DrawsStore;

use crate::error::CliResult;
use crate::output::{
    diagnostics_csv, ensure_dir, flagged, is_effect, load_store, num, require_draws, write_text, Manifest, RHAT_FLAG,
};
use crate::DiagnoseArgs;

const HISTOGRAM_BINS: usize = 30;

/// Writes `diagnostics.csv` (R-hat, ESS, flag per quantity), `sampler.txt`,
/// and per-chain `trace.csv` / `density.csv` for every non-effect quantity.
pub fn diagnose(args: &DiagnoseArgs) -> CliResult<()> {
    let store = load_store(&args.draws)?;
    require_draws(&store)?;
    ensure_dir(&args.out)?;

    let rows = summarize(&store, |_| true);
    write_text(&args.out.join("diagnostics.csv"), &diagnostics_csv(&rows))?;

    let max_depth = store
        .attrs
        .get("max_tree_depth")
        .and_then(|d| d.parse().ok())
        .unwrap_or(10);
    let stats = store.all_stats();
    let mean_accept = stats.iter().map(|s| s.accept_stat).sum::<f64>() / stats.len() as f64;
    let bad: Vec<&str> = rows.iter().filter(|p| flagged(p)).map(|p| p.name.as_str()).collect();
    let max_rhat = rows
        .iter()
        .filter_map(|p| p.rhat.as_ref().ok().copied())
        .fold(f64::NAN, f64::max);
    let mut m = Manifest::default();
    m.set("chains", store.n_chains())
        .set("retained_per_chain", store.n_retained())
        .set("divergent", store.n_divergent())
        .set("max_tree_depth", max_depth)
        .set("max_depth_hits", store.n_saturated(max_depth))
        .set("mean_accept_stat", num(mean_accept))
        .set("max_rhat", num(max_rhat))
        .set("flagged", bad.len());
    write_text(&args.out.join("sampler.txt"), &m.render())?;

    let traced: Vec<usize> = (0..store.names().len()).filter(|&i| !is_effect(&store.names()[i])).collect();
    write_text(&args.out.join("trace.csv"), &trace_csv(&store, &traced))?;
    write_text(&args.out.join("density.csv"), &density_csv(&store, &traced))?;

    print!("{}", m.render());
    if !bad.is_empty() {
        let shown = bad.len().min(10);
        let more = if bad.len() > shown { format!(" and {} more", bad.len() - shown) } else { String::new() };
        println!("R-hat above {RHAT_FLAG}: {}{more}", bad[..shown].join(", "));
    }
    Ok(())
}

fn trace_csv(store: &DrawsStore, traced: &[usize]) -> String {
    let mut s = String::from("chain,iter,name,value\n");
    for &i in traced {
        let name = &store.names()[i];
        for (c, chain) in store.chains_of(i).iter().enumerate() {
            for (t, v) in chain.iter().enumerate() {
                let _ = writeln!(s, "{},{},{name},{v:?}", c + 1, t + 1);
            }
        }
    }
    s
}

/// Per-chain histogram densities over a shared range of 30 equal bins.
fn density_csv(store: &DrawsStore, traced: &[usize]) -> String {
    let mut s = String::from("name,chain,bin,lo,hi,density\n");
    for &i in traced {
        let name = &store.names()[i];
        let chains = store.chains_of(i);
        let finite = chains.iter().flatten().copied().filter(|v| v.is_finite());
        let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            continue;
        }
        let width = if hi > lo { (hi - lo) / HISTOGRAM_BINS as f64 } else { 1.0 };
        for (c, chain) in chains.iter().enumerate() {
            let mut counts = [0usize; HISTOGRAM_BINS];
            for v in chain.iter().filter(|v| v.is_finite()) {
                let b = (((v - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
                counts[b] += 1;
            }
            let n = chain.len().max(1) as f64;
            for (b, k) in counts.iter().enumerate() {
                let a = lo + b as f64 * width;
                let _ = writeln!(
                    s,
                    "{name},{},{},{:?},{:?},{:?}",
                    c + 1,
                    b + 1,
                    a,
                    a + width,
                    *k as f64 / (n * width)
                );
            }
        }
    }
    s
}
