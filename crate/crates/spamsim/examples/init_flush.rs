//! Flush dynamics at the charge boundary: thermalization toward the
//! partition-function equilibrium, the speedup of the 2-3 boundary over
//! the 1-2 boundary, and drift-induced non-monotonic settling.
//!
//! ```bash
//! cargo run --example init_flush
//! ```

use std::fmt::Write as _;
use std::path::Path;

use spamsim::initialization::{
    equilibrium_population, flush_dynamics, flush_with_drift, ChargeBoundary, EncodedState,
};
use spamsim::load_config;

fn main() -> spamsim::Result<()> {
    let config = load_config(Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/configs/default.toml"
    )))?;
    let device = &config.device;
    let eq_excited = 1.0 - equilibrium_population(device).p_singlet;
    println!("partition-function excited fraction: {eq_excited:.3e}");

    let times: Vec<f64> = (0..=100).map(|i| i as f64 * 10.0).collect();
    let input = EncodedState::dephased();
    let mut csv = String::from("t_ns,p_triplet_23,p_triplet_12,p_triplet_drift\n");

    let mut init = config.init.clone();
    init.drift_amplitude_mv = 0.0;
    init.boundary = ChargeBoundary::TwoThree;
    let fast = flush_dynamics(&init, device, &input, &times)?;
    init.boundary = ChargeBoundary::OneTwo;
    let slow = flush_dynamics(&init, device, &input, &times)?;
    let drift = flush_with_drift(&config.init, device, &input, &times)?;

    for (i, &t) in times.iter().enumerate() {
        writeln!(
            csv,
            "{t},{},{},{}",
            fast.states[i].measured_triplet_fraction(1.0),
            slow.states[i].measured_triplet_fraction(1.0),
            drift.states[i].measured_triplet_fraction(1.0),
        )
        .unwrap();
    }
    std::fs::create_dir_all("out/init_flush")?;
    std::fs::write("out/init_flush/flush_traces.csv", csv)?;

    let reached = |states: &[EncodedState]| {
        times
            .iter()
            .zip(states)
            .find(|(_, s)| s.measured_triplet_fraction(1.0) < 1.5 * eq_excited)
            .map(|(t, _)| *t)
    };
    println!(
        "time to 1.5x equilibrium: 2-3 boundary {:?} ns, 1-2 boundary {:?} ns",
        reached(&fast.states),
        reached(&slow.states)
    );
    println!("wrote out/init_flush/flush_traces.csv");
    Ok(())
}
