//! Spin blockade spectroscopy: current histograms versus detuning, with
//! the singlet and triplet branches resolving inside the measure window.
//!
//! ```bash
//! cargo run --release --example spectroscopy
//! ```

use std::path::Path;

use spamsim::{load_config, run_experiment, ExperimentName};

fn main() -> spamsim::Result<()> {
    let config = load_config(Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/configs/default.toml"
    )))?;
    let summary = run_experiment(
        ExperimentName::Spectroscopy,
        &config,
        Path::new("out/spectroscopy"),
    )?;
    println!("{}", summary.one_line);
    Ok(())
}
