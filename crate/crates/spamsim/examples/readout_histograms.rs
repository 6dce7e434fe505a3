//! Single-shot readout histograms at short and long integration, with
//! two-Gaussian fits and the SNR fidelity bounds.
//!
//! ```bash
//! cargo run --release --example readout_histograms
//! ```

use std::fmt::Write as _;
use std::path::Path;

use spamsim::initialization::EncodedState;
use spamsim::readout::{
    fit_double_gaussian, measurement_setup, simulate_shots, snr_fidelity_bound, Histogram,
    ShotOptions,
};
use spamsim::{load_config, Result};

fn main() -> Result<()> {
    let config = load_config(Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/configs/default.toml"
    )))?;
    std::fs::create_dir_all("out/readout_histograms")?;

    // Fast unreferenced measurement at the configured 980 ns, then a
    // long referenced one that saturates the 1/f floor.
    for (tag, t_int_ns, referenced) in [("fast", 980.0, false), ("slow", 40_000.0, true)] {
        let mut chain = config.chain.clone();
        chain.t_int_ns = t_int_ns;
        let ctx = measurement_setup(&chain, &config.device)?;
        let shots = simulate_shots(
            &chain,
            &ctx,
            &EncodedState::dephased(),
            100_000,
            config.run.seed,
            &ShotOptions {
                t1_ms: None,
                referenced,
            },
        )?;
        let hist = Histogram::from_shots(&shots, 160)?;
        let fit = fit_double_gaussian(&hist)?;
        println!(
            "{tag}: t_int = {t_int_ns} ns (referenced = {referenced}), SNR = {:.2}, \
             bound on 1-F_BC = {:.2e}",
            fit.snr,
            snr_fidelity_bound(fit.snr)?
        );
        let mut csv = String::from("bin_lo_pa,bin_hi_pa,count\n");
        for (j, c) in hist.counts.iter().enumerate() {
            writeln!(csv, "{},{},{c}", hist.edges_pa[j], hist.edges_pa[j + 1]).unwrap();
        }
        std::fs::write(format!("out/readout_histograms/histogram_{tag}.csv"), csv)?;
        let mut csv = String::from("shot_index,current_pa\n");
        for (i, s) in shots.iter().enumerate().take(10_000) {
            writeln!(csv, "{i},{s}").unwrap();
        }
        std::fs::write(format!("out/readout_histograms/shots_{tag}.csv"), csv)?;
    }
    println!("wrote out/readout_histograms/{{histogram,shots}}_{{fast,slow}}.csv");
    Ok(())
}
