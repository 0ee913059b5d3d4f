use crate::error::CliResult;
use crate::output::{load_store, require_draws, summary_csv, summary_table, write_text};
use crate::SummarizeArgs;

pub fn summarize(args: &SummarizeArgs) -> CliResult<()> {
    let store = load_store(&args.draws)?;
    require_draws(&store)?;
    if let Some(out) = &args.out {
        write_text(out, &summary_csv(&store, args.conditional_scale))?;
    }
    print!("{}", summary_table(&store, args.conditional_scale));
    Ok(())
}
