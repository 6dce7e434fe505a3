//! Thermal initialization by electron exchange with a cold reservoir.
//!
//! Biasing the doubly occupied dot to a charge boundary lets the bath
//! "flush" excited states: the dot trades an electron with the 2DEG and
//! re-equilibrates. Equilibrium occupation of the two-electron levels is
//! the partition function
//!
//! ```text
//! Z_2e = 1 + 3·exp(−E_o·β) + 4·exp(−E_v·β),    β = 1/(k_B·T_e)
//! ```
//!
//! (orbital triplet threefold, valley singlet+triplet near-fourfold).
//! Tunneling rates between an N-electron state of spin S_i and an
//! (N+1)-electron state of spin S_j carry the Clebsch-Gordan weight
//!
//! ```text
//! γ_ij = (S_i+1)/(2S_i+1)·δ_{S_i+1/2,S_j} + S_i/(2S_i+1)·δ_{S_i−1/2,S_j}
//! ```
//!
//! so a spin-1/2 reservoir-exchanged state couples three times more
//! strongly to triplets than singlets when loading the second electron,
//! and three times more strongly to singlets when the intermediate is the
//! three-electron ground state. Combined with Fermi occupation factors
//! and multiplet degeneracies, the master equation below is in detailed
//! balance with the Boltzmann distribution over the modeled levels.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::spectrum::DeviceParams;

/// Populations outside the qubit space, by mechanism.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LeakPopulations {
    /// Orbital-excited (2,0) triplet; blocked, reads triplet-like.
    pub orbital20: f64,
    /// Valley-excited (2,0) singlet/triplet shelf; blocked, reads triplet-like.
    pub valley20: f64,
    /// Gauge electron in an excited valley/orbital state. Does not alter
    /// readout current; scrambles exchange control (see benchmarking).
    pub gauge: f64,
    /// Ended in the N±1 charge state at the initialization boundary.
    pub wrong_charge: f64,
}

impl LeakPopulations {
    pub fn total(&self) -> f64 {
        self.orbital20 + self.valley20 + self.gauge + self.wrong_charge
    }

    /// Leak weight that is spin-blocked at readout (excludes gauge).
    pub fn blocked(&self) -> f64 {
        self.orbital20 + self.valley20 + self.wrong_charge
    }
}

/// Three-level occupancy distribution of the encoded qubit:
/// singlet/|0⟩, triplet/|1⟩, and leaked population with sub-labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncodedState {
    pub p_singlet: f64,
    pub p_triplet: f64,
    pub leak: LeakPopulations,
}

impl EncodedState {
    pub fn new_qubit(p_singlet: f64, p_triplet: f64) -> Self {
        EncodedState {
            p_singlet,
            p_triplet,
            leak: LeakPopulations::default(),
        }
    }

    /// Pure encoded |0⟩.
    pub fn ground() -> Self {
        EncodedState::new_qubit(1.0, 0.0)
    }

    /// Hyperfine-dephased idle state: 50/50 in the singlet/triplet readout
    /// basis (S and T₀ mix at low field).
    pub fn dephased() -> Self {
        EncodedState::new_qubit(0.5, 0.5)
    }

    pub fn total(&self) -> f64 {
        self.p_singlet + self.p_triplet + self.leak.total()
    }

    pub fn is_normalized(&self) -> bool {
        let probs = [
            self.p_singlet,
            self.p_triplet,
            self.leak.orbital20,
            self.leak.valley20,
            self.leak.gauge,
            self.leak.wrong_charge,
        ];
        probs.iter().all(|p| (-1e-12..=1.0 + 1e-12).contains(p))
            && (self.total() - 1.0).abs() <= 1e-12
    }

    /// Probability a thresholded measurement reports "triplet".
    /// Blocked excited states sit on the (1,1)-like current branch and
    /// read triplet with weight `blocked_reads_triplet` (default 1).
    pub fn measured_triplet_fraction(&self, blocked_reads_triplet: f64) -> f64 {
        self.p_triplet + blocked_reads_triplet * self.leak.blocked()
    }

    pub fn validate_into(&self, prefix: &str, out: &mut Vec<String>) {
        if !self.is_normalized() {
            out.push(format!(
                "{prefix}: populations must lie in [0,1] and sum to 1 (sum = {})",
                self.total()
            ));
        }
    }
}

/// Equilibrium two-electron populations from the partition function.
/// The gauge label is left at zero; see [`gauge_excited_fraction`].
pub fn equilibrium_population(params: &DeviceParams) -> EncodedState {
    let beta = 1.0 / params.thermal_energy_uev();
    let w_orb = 3.0 * (-params.e_orbital_uev * beta).exp();
    let w_val = 4.0 * (-params.e_valley_uev * beta).exp();
    let z = 1.0 + w_orb + w_val;
    EncodedState {
        p_singlet: 1.0 / z,
        p_triplet: 0.0,
        leak: LeakPopulations {
            orbital20: w_orb / z,
            valley20: w_val / z,
            gauge: 0.0,
            wrong_charge: 0.0,
        },
    }
}

/// Equilibrium excited fraction of the gauge electron: a two-level
/// Boltzmann factor at its own excitation energy.
pub fn gauge_excited_fraction(params: &DeviceParams) -> f64 {
    let beta = 1.0 / params.thermal_energy_uev();
    let w = (-params.e_valley_gauge_uev * beta).exp();
    w / (1.0 + w)
}

/// Spin-dependent tunneling weight between an N-electron state of total
/// spin `s_initial` and an (N+1)-electron state of spin `s_final`.
/// Zero unless the spins differ by exactly 1/2.
pub fn spin_tunnel_weight(s_initial: f64, s_final: f64) -> Result<f64> {
    for (name, s) in [("s_initial", s_initial), ("s_final", s_final)] {
        if s < 0.0 || !s.is_finite() || ((2.0 * s) - (2.0 * s).round()).abs() > 1e-9 {
            return Err(SimError::invalid(format!(
                "spin_tunnel_weight: {name} = {s} is not a nonnegative half-integer"
            )));
        }
    }
    let up = ((s_final - (s_initial + 0.5)).abs() < 1e-9) as u8 as f64;
    let down = ((s_final - (s_initial - 0.5)).abs() < 1e-9) as u8 as f64;
    Ok((s_initial + 1.0) / (2.0 * s_initial + 1.0) * up
        + s_initial / (2.0 * s_initial + 1.0) * down)
}

/// Which charge boundary the flush uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChargeBoundary {
    /// (1,0)-(2,0): the intermediate reservoir-exchanged state has one electron.
    #[serde(rename = "1-2")]
    OneTwo,
    /// (2,0)-(3,0): the intermediate has three electrons.
    #[serde(rename = "2-3")]
    TwoThree,
}

/// Configuration of the initialization stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    pub boundary: ChargeBoundary,
    /// Bare dot-bath tunnel rate, 1/µs.
    pub gamma0_per_us: f64,
    /// Multiplier on Γ₀ while the barrier gate is pulsed low.
    pub barrier_pulse_factor: f64,
    /// Flush dwell time, ns.
    pub flush_duration_ns: f64,
    /// Plunger bias relative to the boundary window center, mV.
    pub bias_offset_mv: f64,
    /// Gate lever arm, µeV of dot-level shift per mV of plunger bias.
    pub lever_arm_uev_per_mv: f64,
    /// Waveform settling distortion: initial bias error, mV.
    pub drift_amplitude_mv: f64,
    /// Waveform settling time constant, ns.
    pub drift_tau_ns: f64,
    /// Bias spacing between the (1,0)-(2,0) and (2,0)-(3,0) windows, mV
    /// (used by the two-band bias/duration sweep map).
    pub boundary_spacing_mv: f64,
    /// Track N±1 occupation explicitly (extended partition function).
    /// When false, the wrong-charge weight is renormalized away.
    #[serde(default)]
    pub track_wrong_charge: bool,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            boundary: ChargeBoundary::TwoThree,
            gamma0_per_us: 5.0,
            barrier_pulse_factor: 8.0,
            flush_duration_ns: 300.0,
            bias_offset_mv: 0.0,
            lever_arm_uev_per_mv: 50.0,
            drift_amplitude_mv: 0.0,
            drift_tau_ns: 80.0,
            boundary_spacing_mv: 5.0,
            track_wrong_charge: false,
        }
    }
}

impl InitConfig {
    pub fn validate_into(&self, prefix: &str, out: &mut Vec<String>) {
        if self.gamma0_per_us <= 0.0 || !(self.gamma0_per_us).is_finite() {
            out.push(format!("{prefix}.gamma0_per_us: must be > 0"));
        }
        if self.barrier_pulse_factor < 1.0 {
            out.push(format!("{prefix}.barrier_pulse_factor: must be >= 1"));
        }
        if self.flush_duration_ns < 0.0 {
            out.push(format!("{prefix}.flush_duration_ns: must be >= 0"));
        }
        if self.lever_arm_uev_per_mv <= 0.0 || !(self.lever_arm_uev_per_mv).is_finite() {
            out.push(format!("{prefix}.lever_arm_uev_per_mv: must be > 0"));
        }
        if self.drift_tau_ns <= 0.0 {
            out.push(format!("{prefix}.drift_tau_ns: must be > 0"));
        }
    }

    /// Effective bias offset at time `t_ns` after the waveform step:
    /// exponential approach to the nominal value.
    pub fn settle_distortion_mv(&self, t_ns: f64) -> f64 {
        self.bias_offset_mv + self.drift_amplitude_mv * (-t_ns / self.drift_tau_ns).exp()
    }
}

/// Two-electron levels exchanged with the bath during flush.
/// Index order: S(2,0), orbital T(2,0), valley S(2,0), valley T(2,0).
const N_LEVELS: usize = 4;
const LEVEL_SPINS: [f64; N_LEVELS] = [0.0, 1.0, 0.0, 1.0];
const LEVEL_DEGENERACY: [f64; N_LEVELS] = [1.0, 3.0, 1.0, 3.0];
const INTERMEDIATE_SPIN: f64 = 0.5;
const INTERMEDIATE_DEGENERACY: f64 = 2.0;

fn level_energies(params: &DeviceParams) -> [f64; N_LEVELS] {
    [
        0.0,
        params.e_orbital_uev,
        params.e_valley_uev,
        params.e_valley_uev,
    ]
}

fn fermi(e_uev: f64, beta: f64) -> f64 {
    1.0 / (1.0 + (e_uev * beta).exp())
}

/// Position of the intermediate level above the ground-singlet transition,
/// in µeV, for a bias offset in mV. Offset 0 is the window center; positive
/// offsets push toward the higher-occupancy charge state.
pub fn intermediate_level_uev(init: &InitConfig, params: &DeviceParams, offset_mv: f64) -> f64 {
    0.5 * params.delta_st_uev() - init.lever_arm_uev_per_mv * offset_mv
}

/// Infinitesimal generator of the flush master equation over
/// {S, T_orb, S_v, T_v, intermediate}, in 1/ns, columns summing to zero.
pub fn flush_generator(init: &InitConfig, params: &DeviceParams, u_uev: f64) -> DMatrix<f64> {
    let beta = 1.0 / params.thermal_energy_uev();
    let base = init.gamma0_per_us * init.barrier_pulse_factor / 1000.0; // 1/ns
    let energies = level_energies(params);
    let mut q = DMatrix::<f64>::zeros(N_LEVELS + 1, N_LEVELS + 1);
    let idx_i = N_LEVELS;

    for i in 0..N_LEVELS {
        // Clebsch-Gordan link weight, always quoted for the N -> N+1 direction.
        let (gamma_link, eps) = match init.boundary {
            // Intermediate (1e) is the N state; adding the second electron
            // absorbs a bath electron at E_i − u.
            ChargeBoundary::OneTwo => (
                spin_tunnel_weight(INTERMEDIATE_SPIN, LEVEL_SPINS[i]).unwrap(),
                energies[i] - u_uev,
            ),
            // The 2e level is the N state; adding the third electron
            // absorbs a bath electron at u − E_i.
            ChargeBoundary::TwoThree => (
                spin_tunnel_weight(LEVEL_SPINS[i], INTERMEDIATE_SPIN).unwrap(),
                u_uev - energies[i],
            ),
        };
        let f = fermi(eps, beta);
        // Final-state multiplicity rides each direction; with the Fermi
        // factors this pair is in detailed balance with g·exp(−βE).
        let (rate_to_inter, rate_from_inter) = match init.boundary {
            ChargeBoundary::OneTwo => (
                base * gamma_link * INTERMEDIATE_DEGENERACY * (1.0 - f),
                base * gamma_link * LEVEL_DEGENERACY[i] * f,
            ),
            ChargeBoundary::TwoThree => (
                base * gamma_link * INTERMEDIATE_DEGENERACY * f,
                base * gamma_link * LEVEL_DEGENERACY[i] * (1.0 - f),
            ),
        };
        q[(idx_i, i)] += rate_to_inter;
        q[(i, i)] -= rate_to_inter;
        q[(i, idx_i)] += rate_from_inter;
        q[(idx_i, idx_i)] -= rate_from_inter;
    }
    q
}

/// Result of a flush evolution.
#[derive(Debug, Clone)]
pub struct FlushResult {
    /// State at each requested time.
    pub states: Vec<EncodedState>,
    /// True if the bias was outside the active window and nothing evolved.
    pub frozen: bool,
}

/// Margin (µeV) beyond the nominal window within which bath exchange is
/// still treated as active.
fn active_margin_uev(params: &DeviceParams) -> f64 {
    6.0 * params.thermal_energy_uev()
}

fn pack(state: &EncodedState, params: &DeviceParams) -> (nalgebra::DVector<f64>, f64) {
    // The incoming triplet lands on the lowest blocked excited state.
    let orbital_lowest = params.e_orbital_uev <= params.e_valley_uev;
    let gauge = state.leak.gauge;
    let mut v = nalgebra::DVector::<f64>::zeros(N_LEVELS + 1);
    v[0] = state.p_singlet;
    if orbital_lowest {
        v[1] = state.p_triplet + state.leak.orbital20;
        v[2] = 0.25 * state.leak.valley20;
        v[3] = 0.75 * state.leak.valley20;
    } else {
        v[1] = state.leak.orbital20;
        v[2] = 0.25 * state.leak.valley20;
        v[3] = 0.75 * state.leak.valley20 + state.p_triplet;
    }
    v[4] = state.leak.wrong_charge;
    (v, gauge)
}

fn unpack(v: &nalgebra::DVector<f64>, gauge: f64, track_wrong_charge: bool) -> EncodedState {
    let (singlet, orb, val, wrong) = (v[0], v[1], v[2] + v[3], v[4]);
    let non_gauge = 1.0 - gauge;
    if track_wrong_charge {
        let scale = non_gauge / (singlet + orb + val + wrong);
        EncodedState {
            p_singlet: singlet * scale,
            p_triplet: 0.0,
            leak: LeakPopulations {
                orbital20: orb * scale,
                valley20: val * scale,
                gauge,
                wrong_charge: wrong * scale,
            },
        }
    } else {
        // Wrong-charge endings excluded: renormalize over the 2e levels.
        let scale = non_gauge / (singlet + orb + val);
        EncodedState {
            p_singlet: singlet * scale,
            p_triplet: 0.0,
            leak: LeakPopulations {
                orbital20: orb * scale,
                valley20: val * scale,
                gauge,
                wrong_charge: 0.0,
            },
        }
    }
}

/// Evolve the flush master equation at the configured (static) bias and
/// return the state at each time in `t_grid_ns` (nondecreasing, ns).
///
/// Outside the active window the dynamics are frozen and the input state
/// is returned unchanged with the `frozen` flag set.
pub fn flush_dynamics(
    init: &InitConfig,
    params: &DeviceParams,
    initial: &EncodedState,
    t_grid_ns: &[f64],
) -> Result<FlushResult> {
    flush_with_bias(init, params, initial, t_grid_ns, false, |_t| {
        init.bias_offset_mv
    })
}

/// Evolve the flush master equation with the waveform-settling distortion
/// applied to the bias: offset(t) = nominal + amplitude·exp(−t/τ).
pub fn flush_with_drift(
    init: &InitConfig,
    params: &DeviceParams,
    initial: &EncodedState,
    t_grid_ns: &[f64],
) -> Result<FlushResult> {
    let time_dependent = init.drift_amplitude_mv != 0.0;
    flush_with_bias(init, params, initial, t_grid_ns, time_dependent, |t| {
        init.settle_distortion_mv(t)
    })
}

fn flush_with_bias(
    init: &InitConfig,
    params: &DeviceParams,
    initial: &EncodedState,
    t_grid_ns: &[f64],
    time_dependent: bool,
    offset_at: impl Fn(f64) -> f64,
) -> Result<FlushResult> {
    if t_grid_ns.iter().any(|t| *t < 0.0) || t_grid_ns.windows(2).any(|w| w[1] < w[0]) {
        return Err(SimError::invalid(
            "flush: time grid must be nonnegative and nondecreasing",
        ));
    }
    if !initial.is_normalized() {
        return Err(SimError::invalid("flush: initial state not normalized"));
    }
    let margin = active_margin_uev(params);
    let delta_st = params.delta_st_uev();
    let in_window = |u: f64| u > -margin && u < delta_st + margin;

    // Frozen if the bias never enters the active window.
    let u_nominal = intermediate_level_uev(init, params, init.bias_offset_mv);
    let u_start = intermediate_level_uev(init, params, offset_at(0.0));
    if !in_window(u_nominal) && !in_window(u_start) {
        return Ok(FlushResult {
            states: vec![*initial; t_grid_ns.len()],
            frozen: true,
        });
    }

    let (mut v, gauge) = pack(initial, params);
    let norm0 = v.sum();
    if norm0 > 0.0 {
        v /= norm0;
    } else {
        // All-gauge input has no outer population to evolve.
        return Ok(FlushResult {
            states: vec![*initial; t_grid_ns.len()],
            frozen: false,
        });
    }

    // Piecewise-constant bias propagation by matrix exponential:
    // positivity and normalization are preserved for any substep size,
    // so a static bias can be propagated in one step per target time.
    let substep = if time_dependent {
        let max_rate = init.gamma0_per_us * init.barrier_pulse_factor / 1000.0 * 6.0;
        (0.2 / max_rate).min(init.drift_tau_ns * 0.25).max(1e-3)
    } else {
        f64::INFINITY
    };

    let mut states = Vec::with_capacity(t_grid_ns.len());
    let mut t_now = 0.0;
    for &t_target in t_grid_ns {
        while t_now < t_target - 1e-12 {
            let dt = substep.min(t_target - t_now);
            let u = intermediate_level_uev(init, params, offset_at(t_now + 0.5 * dt));
            if in_window(u) {
                let q = flush_generator(init, params, u);
                let propagator = (q * dt).exp();
                v = propagator * &v;
            }
            t_now += dt;
        }
        states.push(unpack(&v, gauge, init.track_wrong_charge));
    }
    Ok(FlushResult {
        states,
        frozen: false,
    })
}

/// Measured-triplet fraction over a (bias, duration) sweep spanning both
/// charge boundaries. The (2,0)-(3,0) window is centered at bias 0; the
/// (1,0)-(2,0) window sits `boundary_spacing_mv` lower.
pub fn init_sweep_map(
    init: &InitConfig,
    params: &DeviceParams,
    bias_grid_mv: &[f64],
    duration_grid_ns: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if bias_grid_mv.is_empty() || duration_grid_ns.is_empty() {
        return Err(SimError::invalid("init_sweep_map: empty grid"));
    }
    let initial = EncodedState::dephased();
    let mut map = Vec::with_capacity(bias_grid_mv.len());
    for &b in bias_grid_mv {
        // Each boundary sees the bias relative to its own window center.
        let candidates = [
            (ChargeBoundary::TwoThree, b),
            (ChargeBoundary::OneTwo, b + init.boundary_spacing_mv),
        ];
        let mut row = vec![initial.measured_triplet_fraction(1.0); duration_grid_ns.len()];
        for (boundary, offset) in candidates {
            let mut local = init.clone();
            local.boundary = boundary;
            local.bias_offset_mv = offset;
            // The sweep reports the raw measured fraction: biases that
            // strand charge in the N±1 state read blocked/triplet-like.
            local.track_wrong_charge = true;
            let result = flush_with_drift(&local, params, &initial, duration_grid_ns)?;
            if !result.frozen {
                row = result
                    .states
                    .iter()
                    .map(|s| s.measured_triplet_fraction(1.0))
                    .collect();
                break;
            }
        }
        map.push(row);
    }
    Ok(map)
}
