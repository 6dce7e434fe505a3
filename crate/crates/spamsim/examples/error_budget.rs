//! The SPAM error budget: thermal initialization, SNR, relaxation, and
//! mapping lines, compared against an observed benchmarking-contrast
//! infidelity; unexplained error is inverted into an implied excitation
//! energy for the gauge electron.
//!
//! ```bash
//! cargo run --example error_budget
//! ```

use std::path::Path;

use spamsim::budget::{assemble_budget, invert_missing_error};
use spamsim::load_config;

fn main() -> spamsim::Result<()> {
    let config = load_config(Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/configs/default.toml"
    )))?;
    let budget = assemble_budget(
        &config.device,
        &config.chain,
        &config.landscape,
        &config.mapping,
        config.budget.boltzmann_quoted,
    )?;
    let observed = config.budget.compare_observed.unwrap_or(2.5e-3);
    let budget = budget.compare(observed);
    print!("{}", budget.to_table());
    if let Some(missing) = budget.missing {
        let energy = invert_missing_error(missing, config.device.t_electron_mk)?;
        println!(
            "\nmissing {missing:.2e} as a two-level Boltzmann fraction at \
             {} mK implies an excitation energy of {energy:.0} µeV",
            config.device.t_electron_mk
        );
    }
    Ok(())
}
