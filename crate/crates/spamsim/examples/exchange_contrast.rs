//! Exchange-oscillation contrast as an alternative SPAM metric: rotate
//! about the n axis, fit the oscillation, and invert the missing
//! contrast into an implied SPAM infidelity.
//!
//! ```bash
//! cargo run --release --example exchange_contrast
//! ```

use std::path::Path;

use spamsim::{load_config, run_experiment, ExperimentName};

fn main() -> spamsim::Result<()> {
    let config = load_config(Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/configs/default.toml"
    )))?;
    let summary = run_experiment(
        ExperimentName::Exchange,
        &config,
        Path::new("out/exchange_contrast"),
    )?;
    println!("{}", summary.one_line);
    Ok(())
}
