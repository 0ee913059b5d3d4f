use ordbridge_core::data::{generate, write_dataset_csv, EncodingPlan, TrueParams, TruthManifest};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, read_text, write_text, Manifest};
use crate::SimulateArgs;

/// Writes `data.csv`, `encoding.txt`, `truth.json` and `manifest.txt`.
pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let truth: TrueParams = match &args.truth {
        Some(p) => serde_json::from_str(&read_text(p)?)
            .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?,
        None => TrueParams::recovery_fixture(),
    };
    truth.validate()?;
    let generated = generate(&truth, &mut ChaCha8Rng::seed_from_u64(args.seed))?;
    let data = &generated.data;
    let truth_manifest = TruthManifest::new(&truth, args.seed, &generated);

    ensure_dir(&args.out)?;
    write_dataset_csv(data, &args.out.join("data.csv"))?;
    let plan = EncodingPlan::numeric("y", data.n_categories(), data.covariate_names());
    write_text(&args.out.join("encoding.txt"), &plan.to_text())?;
    write_text(&args.out.join("truth.json"), &truth_manifest.to_json()?)?;

    let mut m = Manifest::default();
    m.set("command", "simulate")
        .set("version", env!("CARGO_PKG_VERSION"))
        .set("seed", args.seed)
        .set("truth", args.truth.as_ref().map_or("recovery-fixture".into(), |p| p.display().to_string()))
        .set("n_obs", data.n_obs())
        .set("n_regions", data.n_regions())
        .set("n_families", data.n_families())
        .set("dataset_hash", data.content_hash());
    write_text(&args.out.join("manifest.txt"), &m.render())?;
    println!(
        "simulated {} observations in {} regions and {} families -> {}",
        data.n_obs(),
        data.n_regions(),
        data.n_families(),
        args.out.display()
    );
    Ok(())
}
