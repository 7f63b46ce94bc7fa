//! Regenerates the bundled synthetic dataset:
//! `cargo run -p eager-core --example make_fixture -- fixtures/perturbed500`

use std::path::PathBuf;

use eager::dataset::split_folds;
use eager::ingest::write_openea_dataset;
use eager::synthetic::{perturbed_pair, PerturbedConfig};

fn main() -> eager::Result<()> {
    let dir: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "fixtures/perturbed500".into()).into();
    let pair = perturbed_pair(&PerturbedConfig::default())?;
    let folds = split_folds(&pair.gold, 0)?;
    write_openea_dataset(&dir, &pair.kg1, &pair.kg2, &pair.gold, Some(&folds))?;
    println!("wrote {}", dir.display());
    Ok(())
}
