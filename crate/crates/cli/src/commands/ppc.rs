use std::fmt::Write as _;

use ordbridge_core::ppc::ppc_report;

use crate::error::CliResult;
use crate::output::{check_same_data, load_dataset, load_store, num, require_draws, write_text};
use crate::PpcArgs;

pub fn ppc(args: &PpcArgs) -> CliResult<()> {
    let (data, _, _) = load_dataset(&args.data.data, args.data.encoding.as_deref())?;
    let store = load_store(&args.draws)?;
    require_draws(&store)?;
    let spec = check_same_data(&store, &args.draws, &data)?;
    let table = ppc_report(&store, &data, &spec, args.seed)?;
    if let Some(out) = &args.out {
        let mut s = String::from("diff,mean,sd,q2.5,q97.5\n");
        for (code, r) in table.codes.iter().zip(&table.rows) {
            let _ = writeln!(s, "{code},{},{},{},{}", num(r.mean), num(r.sd), num(r.q025), num(r.q975));
        }
        write_text(out, &s)?;
    }
    print!("{}", table.render());
    Ok(())
}
