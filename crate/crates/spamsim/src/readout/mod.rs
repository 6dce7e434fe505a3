//! Dot-charge-sensor readout chain: signal model, shot simulation, and
//! SNR analysis.
//!
//! The sensor's Coulomb-blockade conductance is probed by a square-wave
//! source-drain bias; the demodulated peak-to-peak current separates
//! singlet from triplet because the ground singlet transfers to the
//! doubly occupied charge state inside the measure window while triplets
//! stay blocked. Currents here are referenced so the (1,1) branch sits
//! at 0 pA and the (2,0) branch at the full signal separation.

pub mod gaussian;
pub mod noise;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::initialization::EncodedState;
use crate::rng::StreamKey;
use crate::spectrum::{self, DeviceParams, MeasureWindow};

pub use gaussian::{fit_double_gaussian, snr_fidelity_bound, GaussianPairFit, Histogram};
pub use noise::{
    boxcar_onef_integral, difference_onef_integral, periodogram, synthesize_1f, DemodFilter, LN2,
};

/// One effectively-white voltage noise source at the amplifier input.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhiteSource {
    pub name: String,
    /// Voltage spectral density, pV/√Hz.
    pub density_pv_sqrt_hz: f64,
}

/// Signal-chain parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainParams {
    /// Sense resistor, kΩ.
    #[serde(default = "default_r_s")]
    pub r_s_kohm: f64,
    /// Parasitic capacitance at the amplifier input, pF.
    #[serde(default = "default_c_p")]
    pub c_p_pf: f64,
    /// Square-wave modulation frequency, MHz.
    #[serde(default = "default_f_mod")]
    pub f_mod_mhz: f64,
    /// Source-drain bias amplitude, µV.
    pub v_sd_uv: f64,
    /// Chain-referred transconductance at the configured bias:
    /// demodulated current amplitude per gate-referred potential, pA/µV.
    pub g_m_pa_per_uv: f64,
    /// 1/f charge-noise amplitude A at 1 Hz, gate-referred µV/√Hz.
    #[serde(default = "default_onef_amplitude")]
    pub one_f_amplitude_uv: f64,
    /// White noise sources at the amplifier input.
    #[serde(default = "default_white_sources")]
    pub white_sources: Vec<WhiteSource>,
    /// Sensor potential shift between the two charge states, µV.
    pub dcs_potential_shift_uv: f64,
    /// Dead time before modulation starts, µs.
    pub t_settle_us: f64,
    /// Integration time, ns.
    pub t_int_ns: f64,
    /// Total experiment duration setting the lowest resolved 1/f
    /// frequency for unreferenced measurements, s.
    #[serde(default = "default_t_experiment")]
    pub t_experiment_s: f64,
    /// Coulomb-peak width of the sensor in gate-referred µV; sets both
    /// the transconductance compression with bias and the saturation of
    /// the response to large potential-noise excursions.
    pub dcs_peak_width_uv: f64,
    /// Fraction of the source-drain bias seen by the sensor level.
    pub bias_lever: f64,
    /// Operating detuning inside the measure window, µeV.
    pub measure_detuning_uev: f64,
}

fn default_r_s() -> f64 {
    20.0
}

fn default_c_p() -> f64 {
    8.0
}

fn default_f_mod() -> f64 {
    2.0
}

fn default_onef_amplitude() -> f64 {
    5.0
}

fn default_t_experiment() -> f64 {
    1.0
}

/// Three comparable white sources in the 200-300 pV/√Hz band.
fn default_white_sources() -> Vec<WhiteSource> {
    ["hemt", "johnson", "shot"]
        .into_iter()
        .map(|name| WhiteSource {
            name: name.into(),
            density_pv_sqrt_hz: 250.0,
        })
        .collect()
}

impl Default for ChainParams {
    fn default() -> Self {
        ChainParams {
            r_s_kohm: default_r_s(),
            c_p_pf: default_c_p(),
            f_mod_mhz: default_f_mod(),
            v_sd_uv: 40.0,
            g_m_pa_per_uv: 0.3,
            one_f_amplitude_uv: default_onef_amplitude(),
            white_sources: default_white_sources(),
            dcs_potential_shift_uv: 397.1,
            t_settle_us: 7.02,
            t_int_ns: 980.0,
            t_experiment_s: default_t_experiment(),
            dcs_peak_width_uv: 60.0,
            bias_lever: 0.5,
            measure_detuning_uev: 95.0,
        }
    }
}

impl ChainParams {
    pub fn validate_into(&self, prefix: &str, out: &mut Vec<String>) {
        let mut need_pos = |name: &str, v: f64| {
            if v <= 0.0 || !v.is_finite() {
                out.push(format!("{prefix}.{name}: must be > 0, got {v}"));
            }
        };
        need_pos("r_s_kohm", self.r_s_kohm);
        need_pos("c_p_pf", self.c_p_pf);
        need_pos("f_mod_mhz", self.f_mod_mhz);
        need_pos("v_sd_uv", self.v_sd_uv);
        need_pos("g_m_pa_per_uv", self.g_m_pa_per_uv);
        need_pos("dcs_potential_shift_uv", self.dcs_potential_shift_uv);
        need_pos("t_int_ns", self.t_int_ns);
        need_pos("t_experiment_s", self.t_experiment_s);
        need_pos("dcs_peak_width_uv", self.dcs_peak_width_uv);
        need_pos("bias_lever", self.bias_lever);
        if self.one_f_amplitude_uv < 0.0 {
            out.push(format!("{prefix}.one_f_amplitude_uv: must be >= 0"));
        }
        if self.t_settle_us < 0.0 {
            out.push(format!("{prefix}.t_settle_us: must be >= 0"));
        }
        if self.white_sources.is_empty() {
            out.push(format!("{prefix}.white_sources: must not be empty"));
        }
        for (i, s) in self.white_sources.iter().enumerate() {
            if s.density_pv_sqrt_hz <= 0.0 || !(s.density_pv_sqrt_hz).is_finite() {
                out.push(format!("{prefix}.white_sources[{i}]: density must be > 0"));
            }
        }
    }

    /// Total measurement wall time per shot: settle plus integration, µs.
    pub fn t_meas_us(&self) -> f64 {
        self.t_settle_us + self.t_int_ns * 1e-3
    }

    /// Quadrature sum of the white sources as a current density, pA²/Hz.
    pub fn white_current_density_pa2_hz(&self) -> f64 {
        self.white_sources
            .iter()
            .map(|s| (s.density_pv_sqrt_hz / (self.r_s_kohm * 1000.0)).powi(2))
            .sum()
    }

    /// Bandwidth set by the sense resistor and parasitic capacitance, MHz.
    pub fn chain_corner_mhz(&self) -> f64 {
        1e3 / (2.0 * std::f64::consts::PI * self.r_s_kohm * self.c_p_pf)
    }

    /// Product G_m·A, pA: the 1/f noise scale of the histogram variance.
    pub fn gm_a_pa(&self) -> f64 {
        self.g_m_pa_per_uv * self.one_f_amplitude_uv
    }
}

/// White-noise standard deviation of the demodulated peak-to-peak
/// current for integration time `t_int_ns`, in pA. Scales as 1/√t.
pub fn white_noise_sigma(chain: &ChainParams, t_int_ns: f64) -> Result<f64> {
    let filter = DemodFilter::new(t_int_ns, chain.f_mod_mhz)?;
    Ok((chain.white_current_density_pa2_hz() * filter.enbw_hz).sqrt())
}

/// Total histogram variance in pA².
///
/// Referenced (a subtracted, immediately subsequent reference window):
/// σ_I² = 2·σ_SD² + 16·ln2·G_m²·A², the conservative small-shift form.
/// Unreferenced: σ_SD² plus the boxcar-filtered 1/f term with the
/// low-frequency cutoff 1/T_experiment.
pub fn histogram_variance(chain: &ChainParams, referenced: bool) -> Result<f64> {
    let sigma_sd = white_noise_sigma(chain, chain.t_int_ns)?;
    let gm_a = chain.gm_a_pa();
    if referenced {
        Ok(2.0 * sigma_sd * sigma_sd + 16.0 * LN2 * gm_a * gm_a)
    } else {
        let f_lo = 1.0 / chain.t_experiment_s;
        let ibox = boxcar_onef_integral(chain.t_int_ns, f_lo);
        Ok(sigma_sd * sigma_sd + 4.0 * gm_a * gm_a * ibox)
    }
}

const MAX_GM_FLANK: f64 = 0.658_478_948; // atanh(1/√3): sech² inflection

fn sech2(x: f64) -> f64 {
    let c = x.cosh();
    1.0 / (c * c)
}

/// Transconductance lineshape factor: the demodulated response of a
/// sech² Coulomb peak, operated on its maximum-slope flank, to a bias
/// window of width `lever·V`. Rises linearly in V, compresses once the
/// window reaches the peak width, then falls.
fn gm_lineshape(chain: &ChainParams, v_sd_uv: f64) -> f64 {
    let w = chain.dcs_peak_width_uv;
    let x_op = -MAX_GM_FLANK * w;
    let half = 0.5 * chain.bias_lever * v_sd_uv;
    sech2((x_op + half) / w) - sech2((x_op - half) / w)
}

/// Effective transconductance at bias `v_sd_uv`, calibrated so that the
/// configured G_m applies at the configured bias.
pub fn transconductance_at(chain: &ChainParams, v_sd_uv: f64) -> f64 {
    chain.g_m_pa_per_uv * gm_lineshape(chain, v_sd_uv) / gm_lineshape(chain, chain.v_sd_uv)
}

/// E[tanh²(ratio·z)] for standard normal z: the compression factor of
/// the bounded sensor response to Gaussian potential noise.
fn expected_tanh_sq(ratio: f64) -> f64 {
    if ratio == 0.0 {
        return 0.0;
    }
    let n = 400;
    let h = 16.0 / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let z = -8.0 + (i as f64 + 0.5) * h;
        let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        acc += (ratio * z).tanh().powi(2) * pdf * h;
    }
    acc
}

/// Filtered 1/f potential-noise standard deviation, gate-referred µV.
fn onef_potential_sigma_uv(chain: &ChainParams, t_int_ns: f64, referenced: bool) -> f64 {
    let f_lo = 1.0 / chain.t_experiment_s;
    let integral = if referenced {
        difference_onef_integral(t_int_ns, f_lo)
    } else {
        boxcar_onef_integral(t_int_ns, f_lo)
    };
    chain.one_f_amplitude_uv * integral.sqrt()
}

/// Model-true total noise σ in pA, with the 1/f contribution passed
/// through the bounded (tanh) sensor response. Always at or below the
/// conservative linear form of [`histogram_variance`].
pub fn total_noise_sigma(
    chain: &ChainParams,
    t_int_ns: f64,
    v_sd_uv: f64,
    referenced: bool,
) -> Result<f64> {
    let sigma_sd = white_noise_sigma(chain, t_int_ns)?;
    let white_var = if referenced {
        2.0 * sigma_sd * sigma_sd
    } else {
        sigma_sd * sigma_sd
    };
    let gm = transconductance_at(chain, v_sd_uv);
    let w = chain.dcs_peak_width_uv;
    let sigma_pot = onef_potential_sigma_uv(chain, t_int_ns, referenced);
    let onef_var = (2.0 * gm * w).powi(2) * expected_tanh_sq(sigma_pot / w);
    Ok((white_var + onef_var).sqrt())
}

/// Spin-to-charge conversion efficiency: logistic in the singlet-triplet
/// splitting against the thermal transition width, pinned to at least
/// 0.999 once the splitting reaches 100 µeV.
pub fn s2c_efficiency(device: &DeviceParams) -> f64 {
    let w_th = 3.5 * device.thermal_energy_uev();
    let x = (device.delta_st_uev() - w_th) / w_th;
    let eff = 1.0 / (1.0 + (-13.62 * x).exp());
    if device.delta_st_uev() >= 100.0 {
        eff.max(0.999)
    } else {
        eff
    }
}

/// Everything the shot generator needs about one measurement point.
#[derive(Debug, Clone, Copy)]
pub struct MeasureContext {
    pub detuning_uev: f64,
    pub window: MeasureWindow,
    /// ⟨(2,0)⟩ of the singlet branch at this detuning.
    pub p_s20: f64,
    /// ⟨(2,0)⟩ of the triplet branch at this detuning.
    pub p_t20: f64,
    /// Probability the spin-selective charge transfer succeeds.
    pub s2c_efficiency: f64,
    /// Full charge-branch current separation (peak-to-peak), pA.
    pub signal_pa: f64,
}

impl MeasureContext {
    /// Spin-signal separation after charge-character dilution, pA.
    pub fn spin_separation_pa(&self) -> f64 {
        self.signal_pa * (self.p_s20 - self.p_t20)
    }
}

/// Measurement context at the chain's configured detuning. Fails if the
/// measure window is closed.
pub fn measurement_setup(chain: &ChainParams, device: &DeviceParams) -> Result<MeasureContext> {
    measurement_setup_at(chain, device, chain.measure_detuning_uev)
}

/// Measurement context at an arbitrary detuning (used by spectroscopy,
/// where points outside the window are legitimate).
pub fn measurement_setup_at(
    chain: &ChainParams,
    device: &DeviceParams,
    detuning_uev: f64,
) -> Result<MeasureContext> {
    let window = spectrum::measure_window(device)?;
    let t_c = device.tunnel_coupling_uev;
    let p_s20 = spectrum::charge_character(detuning_uev, 0.0, t_c);
    let p_t20 = spectrum::charge_character(detuning_uev, window.delta_st_uev, t_c);
    let gm = transconductance_at(chain, chain.v_sd_uv);
    Ok(MeasureContext {
        detuning_uev,
        window,
        p_s20,
        p_t20,
        s2c_efficiency: s2c_efficiency(device),
        signal_pa: 2.0 * gm * chain.dcs_potential_shift_uv,
    })
}

/// Per-shot simulation options.
#[derive(Debug, Clone, Copy, Default)]
pub struct ShotOptions {
    /// Relaxation time acting on the blocked triplet during settle plus
    /// integration; `None` disables relaxation.
    pub t1_ms: Option<f64>,
    /// Subtract an immediately subsequent reference window.
    pub referenced: bool,
}

/// Simulate demodulated single-shot currents for an encoded state.
///
/// Each shot draws its spin class from the state, optionally relaxes the
/// triplet (exponential flip to singlet over settle + integration),
/// draws the charge branch through the spin-to-charge conversion
/// efficiency, and adds filtered white and 1/f noise. Shots use
/// counter-based streams: results are independent of evaluation order.
pub fn simulate_shots(
    chain: &ChainParams,
    ctx: &MeasureContext,
    state: &EncodedState,
    n_shots: usize,
    seed: u64,
    opts: &ShotOptions,
) -> Result<Vec<f64>> {
    if n_shots == 0 {
        return Err(SimError::invalid("simulate_shots: n_shots must be >= 1"));
    }
    if !state.is_normalized() {
        return Err(SimError::invalid("simulate_shots: state not normalized"));
    }
    let sigma_white = white_noise_sigma(chain, chain.t_int_ns)?
        * if opts.referenced {
            std::f64::consts::SQRT_2
        } else {
            1.0
        };
    let sigma_pot = onef_potential_sigma_uv(chain, chain.t_int_ns, opts.referenced);
    let gm = transconductance_at(chain, chain.v_sd_uv);
    let w = chain.dcs_peak_width_uv;
    let t1_survival = opts.t1_ms.map(|t1_ms| {
        let t_meas_ns = chain.t_settle_us * 1e3 + chain.t_int_ns;
        (-t_meas_ns / (t1_ms * 1e6)).exp()
    });

    // Cumulative class probabilities: singlet-like reads the (2,0)
    // branch, blocked classes the (1,1) branch; the gauge label follows
    // its (singlet) outer state.
    let p_singlet_like = state.p_singlet + state.leak.gauge;
    let p_triplet = state.p_triplet;
    let key = StreamKey::new(seed, "readout-shots", 0);
    let normal = Normal::new(0.0, 1.0).unwrap();

    let shots: Vec<f64> = (0..n_shots)
        .into_par_iter()
        .map(|i| {
            let mut rng = key.substream(i as u64).rng();
            let u: f64 = rng.gen();
            let mut is_triplet_class = if u < p_singlet_like {
                false
            } else {
                // Everything else is blocked: qubit triplet or excited leak.
                true
            };
            let relaxing_triplet = u >= p_singlet_like && u < p_singlet_like + p_triplet;
            if is_triplet_class && relaxing_triplet {
                if let Some(survive) = t1_survival {
                    if rng.gen::<f64>() >= survive {
                        is_triplet_class = false;
                    }
                }
            }
            // Spin-to-charge conversion failure swaps the charge branch.
            let converted = rng.gen::<f64>() < ctx.s2c_efficiency;
            let on_singlet_branch = is_triplet_class != converted;
            let p20 = if on_singlet_branch {
                ctx.p_s20
            } else {
                ctx.p_t20
            };
            let mean = ctx.signal_pa * p20;
            let n_white: f64 = normal.sample(&mut rng) * sigma_white;
            let pot: f64 = normal.sample(&mut rng) * sigma_pot;
            let n_onef = 2.0 * gm * w * (pot / w).tanh();
            mean + n_white + n_onef
        })
        .collect();
    Ok(shots)
}

/// Model SNR at a detuning and operating point: spin-signal separation
/// over the model-true total noise.
pub fn snr_at(
    chain: &ChainParams,
    device: &DeviceParams,
    detuning_uev: f64,
    t_int_ns: f64,
    v_sd_uv: f64,
    referenced: bool,
) -> Result<f64> {
    let ctx = measurement_setup_at(chain, device, detuning_uev)?;
    let gm_ratio = transconductance_at(chain, v_sd_uv) / transconductance_at(chain, chain.v_sd_uv);
    let separation = ctx.spin_separation_pa() * gm_ratio;
    let sigma = total_noise_sigma(chain, t_int_ns, v_sd_uv, referenced)?;
    Ok(separation / sigma)
}

/// SNR of the configured measurement.
pub fn chain_snr(chain: &ChainParams, device: &DeviceParams) -> Result<f64> {
    snr_at(
        chain,
        device,
        chain.measure_detuning_uev,
        chain.t_int_ns,
        chain.v_sd_uv,
        false,
    )
}

/// SNR over an (integration time, bias) grid; `matrix[i][j]` corresponds
/// to `t_int_grid[i]`, `v_sd_grid[j]`. Unreferenced convention.
pub fn snr_surface(
    chain: &ChainParams,
    device: &DeviceParams,
    t_int_grid_ns: &[f64],
    v_sd_grid_uv: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if t_int_grid_ns.iter().any(|t| *t <= 0.0) || v_sd_grid_uv.iter().any(|v| *v <= 0.0) {
        return Err(SimError::invalid("snr_surface: grids must be positive"));
    }
    t_int_grid_ns
        .iter()
        .map(|&t| {
            v_sd_grid_uv
                .iter()
                .map(|&v| snr_at(chain, device, chain.measure_detuning_uev, t, v, false))
                .collect()
        })
        .collect()
}

/// Spin blockade spectroscopy: per-detuning histograms of the
/// demodulated current for a dephased input state, on shared bin edges.
#[derive(Debug, Clone)]
pub struct Spectroscopy {
    pub detuning_uev: Vec<f64>,
    pub bin_edges_pa: Vec<f64>,
    /// counts[i][j]: detuning i, bin j.
    pub counts: Vec<Vec<u64>>,
}

pub fn spin_blockade_spectroscopy(
    chain: &ChainParams,
    device: &DeviceParams,
    detuning_grid_uev: &[f64],
    shots_per_point: usize,
    seed: u64,
    n_bins: usize,
) -> Result<Spectroscopy> {
    if detuning_grid_uev.is_empty() || shots_per_point == 0 || n_bins == 0 {
        return Err(SimError::invalid("spectroscopy: empty grid or zero shots"));
    }
    let state = EncodedState::dephased();
    let mut all: Vec<Vec<f64>> = Vec::with_capacity(detuning_grid_uev.len());
    for (i, &eps) in detuning_grid_uev.iter().enumerate() {
        let ctx = measurement_setup_at(chain, device, eps)?;
        let shots = simulate_shots(
            chain,
            &ctx,
            &state,
            shots_per_point,
            seed.wrapping_add(i as u64),
            &ShotOptions::default(),
        )?;
        all.push(shots);
    }
    let lo = all.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    let hi = all
        .iter()
        .flatten()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-9);
    let edges: Vec<f64> = (0..=n_bins)
        .map(|i| lo + span * i as f64 / n_bins as f64)
        .collect();
    let counts = all
        .iter()
        .map(|shots| {
            let mut row = vec![0u64; n_bins];
            for &s in shots {
                let idx = (((s - lo) / span * n_bins as f64) as usize).min(n_bins - 1);
                row[idx] += 1;
            }
            row
        })
        .collect();
    Ok(Spectroscopy {
        detuning_uev: detuning_grid_uev.to_vec(),
        bin_edges_pa: edges,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn chain() -> ChainParams {
        ChainParams::default()
    }

    fn device() -> DeviceParams {
        DeviceParams::default()
    }

    #[test]
    fn white_density_quadrature_sum() {
        let c = chain();
        // Three 250 pV/√Hz sources: √3·250 ≈ 433 pV/√Hz before filtering.
        let total_pv = (c
            .white_sources
            .iter()
            .map(|s| s.density_pv_sqrt_hz.powi(2))
            .sum::<f64>())
        .sqrt();
        assert_relative_eq!(total_pv, 3.0f64.sqrt() * 250.0, max_relative = 1e-12);
    }

    #[test]
    fn white_sigma_scales_inverse_sqrt_time() {
        let c = chain();
        let s1 = white_noise_sigma(&c, 980.0).unwrap();
        let s4 = white_noise_sigma(&c, 4.0 * 980.0).unwrap();
        assert_relative_eq!(s4, 0.5 * s1, max_relative = 1e-9);
    }

    #[test]
    fn white_sigma_matches_time_domain_monte_carlo() {
        // Direct synthesis: white samples filtered by sign-correlated
        // averaging, peak-to-peak convention.
        let c = chain();
        let t_int_ns = 980.0;
        let fs: f64 = 64e6; // samples/s
        let n = (t_int_ns * 1e-9 * fs).round() as usize;
        let s_i = c.white_current_density_pa2_hz();
        let sigma_sample = (s_i * fs / 2.0).sqrt();
        let trials = 120_000;
        let normal = Normal::new(0.0, sigma_sample).unwrap();
        let key = StreamKey::new(5, "white-oracle", 0);
        let mut acc = 0.0;
        for t in 0..trials {
            let mut rng = key.substream(t as u64).rng();
            let mut y = 0.0;
            for k in 0..n {
                let tt = (k as f64 + 0.5) / fs;
                let s = noise::square_wave(tt, c.f_mod_mhz * 1e6);
                y += s * normal.sample(&mut rng);
            }
            y *= 2.0 / n as f64;
            acc += y * y;
        }
        let mc_sigma = (acc / trials as f64).sqrt();
        let model = white_noise_sigma(&c, t_int_ns).unwrap();
        assert!(
            (mc_sigma - model).abs() / model < 0.03,
            "MC {mc_sigma} vs model {model}"
        );
    }

    #[test]
    fn histogram_variance_long_integration_limit() {
        // σ_SD → 0: σ_I = 4√(ln2)·G_m·A ≈ 3.330·G_m·A; at G_m·A = 1.5 pA
        // this is the ~5 pA long-duration floor.
        let mut c = chain();
        c.g_m_pa_per_uv = 0.3;
        c.one_f_amplitude_uv = 5.0;
        c.t_int_ns = 1e9; // white noise fully averaged
        let var = histogram_variance(&c, true).unwrap();
        let floor = 4.0 * LN2.sqrt() * c.gm_a_pa();
        assert_relative_eq!(var.sqrt(), floor, max_relative = 1e-3);
        assert_relative_eq!(var.sqrt(), 5.0, max_relative = 2e-3);
    }

    #[test]
    fn reference_subtraction_tradeoff() {
        // Referencing pays only when the 1/f term dominates the white
        // noise: true at long integration, false at short.
        let mut c = chain();
        c.t_int_ns = 40_000.0;
        let unref = histogram_variance(&c, false).unwrap();
        let refd = histogram_variance(&c, true).unwrap();
        assert!(refd < unref, "long t_int: referencing should win");
        c.t_int_ns = 980.0;
        let unref = histogram_variance(&c, false).unwrap();
        let refd = histogram_variance(&c, true).unwrap();
        assert!(refd > unref, "short t_int: referencing should lose");
    }

    #[test]
    fn transconductance_rises_then_falls_with_bias() {
        let c = chain();
        let vals: Vec<f64> = (1..=80)
            .map(|i| transconductance_at(&c, i as f64 * 5.0))
            .collect();
        let peak = vals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert!(peak > 0 && peak < vals.len() - 1, "peak at edge: {peak}");
        assert!(vals[vals.len() - 1] < vals[peak]);
        assert_relative_eq!(transconductance_at(&c, c.v_sd_uv), c.g_m_pa_per_uv);
    }

    #[test]
    fn s2c_efficiency_pinned_near_unity_for_large_splitting() {
        let d = device();
        assert!(s2c_efficiency(&d) >= 0.999);
        let mut d100 = d.clone();
        d100.e_orbital_uev = 100.0;
        assert!(s2c_efficiency(&d100) >= 0.999);
        let mut small = d;
        small.e_orbital_uev = 40.0;
        assert!(s2c_efficiency(&small) < 0.9);
    }

    #[test]
    fn pure_singlet_without_noise_sits_at_branch_current() {
        let mut c = chain();
        c.one_f_amplitude_uv = 0.0;
        for s in &mut c.white_sources {
            s.density_pv_sqrt_hz = 1e-12;
        }
        let d = device();
        let mut ctx = measurement_setup(&c, &d).unwrap();
        ctx.s2c_efficiency = 1.0;
        let shots = simulate_shots(
            &c,
            &ctx,
            &EncodedState::ground(),
            500,
            3,
            &ShotOptions::default(),
        )
        .unwrap();
        let expected = ctx.signal_pa * ctx.p_s20;
        for s in shots {
            assert_relative_eq!(s, expected, max_relative = 1e-6);
        }
    }

    #[test]
    fn triplet_with_t1_equal_to_t_int_keeps_e_inv_weight() {
        let mut c = chain();
        c.t_settle_us = 0.0;
        c.t_int_ns = 1000.0;
        let d = device();
        let ctx = measurement_setup(&c, &d).unwrap();
        let opts = ShotOptions {
            t1_ms: Some(1e-3), // T1 = t_int
            referenced: false,
        };
        let n = 200_000;
        let shots =
            simulate_shots(&c, &ctx, &EncodedState::new_qubit(0.0, 1.0), n, 11, &opts).unwrap();
        let threshold = 0.5 * ctx.signal_pa * (ctx.p_s20 + ctx.p_t20);
        let triplet_frac = shots.iter().filter(|s| **s < threshold).count() as f64 / n as f64;
        let expected = (-1.0f64).exp();
        assert!(
            (triplet_frac - expected).abs() < 0.01,
            "triplet fraction {triplet_frac} vs e^-1 {expected}"
        );
    }

    #[test]
    fn dephased_shots_close_the_loop_through_the_fit() {
        let c = chain();
        let d = device();
        let ctx = measurement_setup(&c, &d).unwrap();
        let shots = simulate_shots(
            &c,
            &ctx,
            &EncodedState::dephased(),
            100_000,
            17,
            &ShotOptions::default(),
        )
        .unwrap();
        let hist = Histogram::from_shots(&shots, 160).unwrap();
        let fit = fit_double_gaussian(&hist).unwrap();
        assert!(
            (fit.weight_singlet - 0.5).abs() < 0.01,
            "weight {}",
            fit.weight_singlet
        );
        let model_snr = chain_snr(&c, &d).unwrap();
        assert!(
            (fit.snr - model_snr).abs() < 0.2,
            "fit snr {} vs model {}",
            fit.snr,
            model_snr
        );
    }

    #[test]
    fn snr_along_time_saturates_and_along_bias_peaks() {
        let c = chain();
        let d = device();
        let t_grid: Vec<f64> = (0..10).map(|i| 980.0 * 2f64.powi(i)).collect();
        let v_grid: Vec<f64> = (1..=40).map(|i| i as f64 * 10.0).collect();
        let surf = snr_surface(&c, &d, &t_grid, &v_grid).unwrap();
        // Along t at fixed small bias: monotone rise, saturating well
        // below the pure-white √t growth.
        let col = 3; // 40 µV
        for i in 1..t_grid.len() {
            assert!(surf[i][col] >= surf[i - 1][col] * 0.999);
        }
        let growth = surf[t_grid.len() - 1][col] / surf[0][col];
        let white_growth = (t_grid[t_grid.len() - 1] / t_grid[0]).sqrt();
        assert!(
            growth < 0.4 * white_growth,
            "growth {growth} vs white {white_growth}"
        );
        // Along bias at fixed t: rises then falls past a critical bias.
        let row = &surf[0];
        let peak = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert!(peak > 0 && peak < row.len() - 1);
        assert!(row[row.len() - 1] < row[peak] * 0.95);
    }

    #[test]
    fn snr_white_only_grows_as_sqrt_t() {
        let mut c = chain();
        c.one_f_amplitude_uv = 0.0;
        let d = device();
        let s1 = snr_at(&c, &d, c.measure_detuning_uev, 1000.0, c.v_sd_uv, false).unwrap();
        let s2 = snr_at(&c, &d, c.measure_detuning_uev, 4000.0, c.v_sd_uv, false).unwrap();
        assert_relative_eq!(s2 / s1, 2.0, max_relative = 1e-6);
    }

    #[test]
    fn spectroscopy_branches_separate_only_inside_window() {
        let c = chain();
        let d = device();
        let grid = [-120.0, 80.0, 280.0];
        let spec = spin_blockade_spectroscopy(&c, &d, &grid, 4000, 23, 100).unwrap();
        // Below and above the window: single branch (all shots in a
        // narrow current band). Inside: bimodal with ~50/50 weights.
        let spread = |row: &Vec<u64>| {
            let total: u64 = row.iter().sum();
            let edges = &spec.bin_edges_pa;
            let mean: f64 = row
                .iter()
                .enumerate()
                .map(|(j, c)| (*c as f64) * 0.5 * (edges[j] + edges[j + 1]))
                .sum::<f64>()
                / total as f64;
            let var: f64 = row
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    let x = 0.5 * (edges[j] + edges[j + 1]);
                    (*c as f64) * (x - mean) * (x - mean)
                })
                .sum::<f64>()
                / total as f64;
            var.sqrt()
        };
        let s_below = spread(&spec.counts[0]);
        let s_inside = spread(&spec.counts[1]);
        let s_above = spread(&spec.counts[2]);
        assert!(
            s_inside > 3.0 * s_below,
            "inside {s_inside} below {s_below}"
        );
        assert!(
            s_inside > 3.0 * s_above,
            "inside {s_inside} above {s_above}"
        );
    }
}
