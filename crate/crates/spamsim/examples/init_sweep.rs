//! Initialization bias/duration sweep map: the two usable flush bands at
//! the charge boundaries and the waveform-settling floor.
//!
//! ```bash
//! cargo run --release --example init_sweep
//! ```

use std::path::Path;

use spamsim::{load_config, run_experiment, ExperimentName};

fn main() -> spamsim::Result<()> {
    let config = load_config(Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/configs/default.toml"
    )))?;
    let summary = run_experiment(
        ExperimentName::InitSweep,
        &config,
        Path::new("out/init_sweep"),
    )?;
    println!("{}", summary.one_line);
    Ok(())
}
