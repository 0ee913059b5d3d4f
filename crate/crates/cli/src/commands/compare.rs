use std::fmt::Write as _;

use ordbridge_core::selection::{dic, lpml, waic, PointwiseLogLik};

use crate::error::{CliError, CliResult};
use crate::output::{check_same_data, load_dataset, load_store, num, require_draws, write_text};
use crate::CompareArgs;

struct Row {
    model: String,
    source: String,
    lpml: f64,
    waic: f64,
    dic: f64,
}

fn best_by(rows: &[Row], key: impl Fn(&Row) -> f64, higher: bool) -> usize {
    let mut best = 0;
    for (i, r) in rows.iter().enumerate() {
        let (k, b) = (key(r), key(&rows[best]));
        if (higher && k > b) || (!higher && k < b) {
            best = i;
        }
    }
    best
}

/// One row per model with LPML (higher is better), WAIC and DIC (lower is
/// better) and a `*` on the best row of each.
pub fn compare(args: &CompareArgs) -> CliResult<()> {
    let (data, _, _) = load_dataset(&args.data.data, args.data.encoding.as_deref())?;
    let mut rows = Vec::new();
    for path in &args.draws {
        let store = load_store(path)?;
        require_draws(&store)?;
        let spec = check_same_data(&store, path, &data)?;
        let pll = PointwiseLogLik::from_store(&store, &data, &spec)?;
        rows.push(Row {
            model: spec.level.to_string(),
            source: path.display().to_string(),
            lpml: lpml(&pll)?.lpml,
            waic: waic(&pll)?.waic,
            dic: dic(&pll)?.dic,
        });
    }
    if rows.is_empty() {
        return Err(CliError::Usage("no draws files given".into()));
    }
    let best = [
        best_by(&rows, |r| r.lpml, true),
        best_by(&rows, |r| r.waic, false),
        best_by(&rows, |r| r.dic, false),
    ];
    let mark = |i: usize, k: usize| if best[k] == i { "*" } else { "" };

    let mut csv = String::from("model,source,lpml,waic,dic,best_lpml,best_waic,best_dic\n");
    let mut table = format!(
        "{:<8} {:<32} {:>13} {:>13} {:>13}\n",
        "model", "draws", "LPML (max)", "WAIC (min)", "DIC (min)"
    );
    for (i, r) in rows.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.model,
            r.source,
            num(r.lpml),
            num(r.waic),
            num(r.dic),
            mark(i, 0),
            mark(i, 1),
            mark(i, 2)
        );
        let _ = writeln!(
            table,
            "{:<8} {:<32} {:>12.2}{:1} {:>12.2}{:1} {:>12.2}{:1}",
            r.model,
            r.source,
            r.lpml,
            mark(i, 0),
            r.waic,
            mark(i, 1),
            r.dic,
            mark(i, 2)
        );
    }
    if let Some(out) = &args.out {
        write_text(out, &csv)?;
    }
    print!("{table}");
    Ok(())
}
