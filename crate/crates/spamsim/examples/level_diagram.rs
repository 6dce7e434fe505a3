//! Two-electron level diagram and the Pauli-spin-blockade measure window.
//!
//! ```bash
//! cargo run --example level_diagram
//! ```

use std::fmt::Write as _;

use spamsim::spectrum::{level_diagram, measure_window, singlet_anticrossing_gap_uev};
use spamsim::DeviceParams;

fn main() -> spamsim::Result<()> {
    let device = DeviceParams::default();
    let grid: Vec<f64> = (-80..=240).map(|i| i as f64).collect();
    let diagram = level_diagram(&device, &grid)?;
    let window = measure_window(&device)?;

    println!(
        "singlet anticrossing gap: {:.1} µeV (2·t_c)",
        singlet_anticrossing_gap_uev(&device)
    );
    println!(
        "measure window: [{:.1}, {:.1}] µeV (width {:.1}, δ_ST = {:.1})",
        window.lo_uev,
        window.hi_uev,
        window.width_uev(),
        window.delta_st_uev
    );

    let mut csv = String::from(
        "detuning_uev,singlet_ground_uev,singlet_excited_uev,t11_minus_uev,t11_zero_uev,\
         t11_plus_uev,triplet_ground_uev,triplet_excited_uev,valley20_uev,singlet_charge\n",
    );
    for (i, &eps) in diagram.detuning_uev.iter().enumerate() {
        writeln!(
            csv,
            "{eps},{},{},{},{},{},{},{},{},{}",
            diagram.singlet_ground[i],
            diagram.singlet_excited[i],
            diagram.triplet11_minus[i],
            diagram.triplet11_zero[i],
            diagram.triplet11_plus[i],
            diagram.triplet_ground[i],
            diagram.triplet_excited[i],
            diagram.valley20[i],
            diagram.singlet_charge_character[i],
        )
        .unwrap();
    }
    std::fs::create_dir_all("out/level_diagram")?;
    std::fs::write("out/level_diagram/level_diagram.csv", csv)?;
    println!("wrote out/level_diagram/level_diagram.csv");
    Ok(())
}
