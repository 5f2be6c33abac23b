//! Runs a JSON experiment file (default `examples/specs/dsbs_lossy.json`)
//! and writes its tables and plot under `target/sweep`.

use std::path::PathBuf;

use ibrelay::commands;
use ibrelay::experiment::ExperimentSpec;

fn main() -> ibrelay::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| root.join("examples/specs/dsbs_lossy.json"));
    let mut spec = ExperimentSpec::load(&path)?;
    spec.trials = spec.trials.min(200);
    let out = root.join("../../target/sweep").join(&spec.name);
    for p in commands::simulate(&spec, &out, None)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
