//! Mapping-error experiment: triplet fractions measured directly after
//! initialization versus after a round trip through the idle bias.
//!
//! ```bash
//! cargo run --release --example mapping_error
//! ```

use std::path::Path;

use spamsim::{load_config, run_experiment, ExperimentName};

fn main() -> spamsim::Result<()> {
    let config = load_config(Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/configs/default.toml"
    )))?;
    let summary = run_experiment(
        ExperimentName::Mapping,
        &config,
        Path::new("out/mapping_error"),
    )?;
    println!("{}", summary.one_line);
    Ok(())
}
