//! Physical constants in the unit system used throughout the crate.
//!
//! Energies are µeV, temperatures mK, magnetic fields mT, times ns
//! (µs/ms where noted), currents pA, gate-referred voltages µV.

/// Boltzmann constant, µeV per mK.
pub const K_B_UEV_PER_MK: f64 = 8.617_333_262e-2;

/// Bohr magneton, µeV per mT.
pub const MU_B_UEV_PER_MT: f64 = 5.788_381_801e-2;

/// Reduced Planck constant, µeV·ns.
pub const HBAR_UEV_NS: f64 = 0.658_211_956_9;

/// Thermal energy k_B·T for a temperature in mK, in µeV.
pub fn thermal_energy_uev(temperature_mk: f64) -> f64 {
    K_B_UEV_PER_MK * temperature_mk
}
