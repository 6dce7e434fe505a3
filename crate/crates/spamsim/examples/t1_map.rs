//! Trial measurements over detuning and duration: the T1 landscape with
//! its hot spots, and the composite SNR+T1 fidelity limit showing that
//! the best measurement bias is not the highest-SNR bias.
//!
//! ```bash
//! cargo run --release --example t1_map
//! ```

use std::path::Path;

use spamsim::{load_config, run_experiment, ExperimentName};

fn main() -> spamsim::Result<()> {
    let config = load_config(Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/configs/default.toml"
    )))?;
    let summary = run_experiment(ExperimentName::T1Map, &config, Path::new("out/t1_map"))?;
    println!("{}", summary.one_line);
    println!("metrics: {}", summary.metrics);
    Ok(())
}
