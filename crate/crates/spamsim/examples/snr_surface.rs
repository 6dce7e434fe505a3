//! SNR versus integration time and source-drain bias: white-noise
//! averaging, the 1/f saturation plateau, and the critical-bias rollover.
//!
//! ```bash
//! cargo run --release --example snr_surface
//! ```

use std::path::Path;

use spamsim::{load_config, run_experiment, ExperimentName};

fn main() -> spamsim::Result<()> {
    let config = load_config(Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/configs/default.toml"
    )))?;
    let summary = run_experiment(
        ExperimentName::SnrSurface,
        &config,
        Path::new("out/snr_surface"),
    )?;
    println!("{}", summary.one_line);
    for f in summary.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
