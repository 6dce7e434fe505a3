//! Blind randomized benchmarking: paired identity- and inversion-compiled
//! decay curves, the joint double-exponential fit, and the SPAM metric
//! 1 - F_BC = 0.5 - B.
//!
//! ```bash
//! cargo run --release --example blind_rb
//! ```

use std::path::Path;

use spamsim::{load_config, run_experiment, ExperimentName};

fn main() -> spamsim::Result<()> {
    let config = load_config(Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/configs/default.toml"
    )))?;
    let summary = run_experiment(ExperimentName::BlindRb, &config, Path::new("out/blind_rb"))?;
    println!("{}", summary.one_line);
    Ok(())
}
