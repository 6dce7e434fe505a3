//! spamsim — a desk-scale simulator of state preparation and measurement
//! (SPAM) in exchange-only triple-quantum-dot spin qubits.
//!
//! The crate models the full SPAM loop of a Si/SiGe triple-dot device
//! from first formulas:
//!
//! - [`spectrum`]: two-electron levels near the (1,1)-(2,0) anticrossing
//!   and the Pauli-spin-blockade measure window;
//! - [`readout`]: the charge-sensor signal chain — square-wave
//!   demodulation, white and 1/f noise, shot histograms, two-Gaussian
//!   fits, SNR and its fidelity bound;
//! - [`relaxation`]: the T1 landscape over bias, the relaxation fidelity
//!   bound, and the swept trial-measurement experiment;
//! - [`initialization`]: thermal initialization at a charge boundary —
//!   partition-function equilibrium, spin-dependent bath tunneling,
//!   flush dynamics, waveform-settling distortion;
//! - [`mapping`]: bias trajectories between initialization, idle, and
//!   measurement — Landau-Zener transitions and magnetic dephasing;
//! - [`benchmarking`]: blind randomized benchmarking over a three-level
//!   encoded state and the joint SPAM metric F_BC;
//! - [`budget`]: the per-mechanism error budget and the missing-error
//!   inversion.
//!
//! Start with the `examples/` directory (one runnable example per
//! capability) or the `spamsim` CLI, which drives the same experiment
//! harness from a TOML config.

pub mod benchmarking;
pub mod budget;
pub mod config;
pub mod constants;
pub mod error;
pub mod experiments;
pub mod fitting;
pub mod initialization;
pub mod mapping;
pub mod readout;
pub mod relaxation;
pub mod rng;
pub mod spectrum;

pub use config::{load_config, validate_config, ExperimentConfig};
pub use error::{Result, SimError};
pub use experiments::{run_experiment, ExperimentName, RunSummary};
pub use initialization::EncodedState;
pub use spectrum::DeviceParams;
