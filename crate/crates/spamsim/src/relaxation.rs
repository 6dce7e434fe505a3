//! Relaxation of the blocked triplet during measurement: the T1
//! landscape over detuning and source-drain bias, the resulting fidelity
//! bound, and the swept trial-measurement experiment.
//!
//! Rates compose additively (Matthiessen): a flat background, Lorentzian
//! hot spots where spin-mixing anticrossings cut through the measure
//! window, and a cubic bias-driven term that switches on above an onset
//! amplitude.

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::fitting::lm_fit;
use crate::readout::{snr_fidelity_bound, ChainParams};
use crate::rng::StreamKey;
use crate::spectrum::DeviceParams;

/// One Lorentzian relaxation hot spot.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HotSpot {
    pub center_uev: f64,
    pub width_uev: f64,
    /// T1 at the spot center, ms (must be shorter than the baseline).
    pub depth_ms: f64,
}

/// T1 over the (detuning, source-drain bias) plane.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct T1Landscape {
    /// Background T1 far from hot spots and below the bias onset, ms.
    pub baseline_ms: f64,
    pub hot_spots: Vec<HotSpot>,
    /// Source-drain amplitude above which bias-driven decay turns on, µV.
    #[serde(default = "default_v_onset")]
    pub v_onset_uv: f64,
    /// Cubic coefficient of the bias-driven rate, 1/(ms·µV³).
    pub cubic_coeff_per_ms_uv3: f64,
}

fn default_v_onset() -> f64 {
    75.0
}

impl Default for T1Landscape {
    fn default() -> Self {
        T1Landscape {
            baseline_ms: 30.0,
            hot_spots: vec![
                HotSpot {
                    center_uev: 30.0,
                    width_uev: 2.0,
                    depth_ms: 0.1,
                },
                HotSpot {
                    center_uev: -10.0,
                    width_uev: 2.0,
                    depth_ms: 0.05,
                },
            ],
            v_onset_uv: default_v_onset(),
            cubic_coeff_per_ms_uv3: 6.4e-5,
        }
    }
}

impl T1Landscape {
    pub fn validate_into(&self, prefix: &str, out: &mut Vec<String>) {
        if self.baseline_ms <= 0.0 || !(self.baseline_ms).is_finite() {
            out.push(format!("{prefix}.baseline_ms: must be > 0"));
        }
        if self.cubic_coeff_per_ms_uv3 < 0.0 {
            out.push(format!("{prefix}.cubic_coeff_per_ms_uv3: must be >= 0"));
        }
        for (i, h) in self.hot_spots.iter().enumerate() {
            if h.width_uev <= 0.0 || !(h.width_uev).is_finite() {
                out.push(format!("{prefix}.hot_spots[{i}].width_uev: must be > 0"));
            }
            if (h.depth_ms <= 0.0 || !(h.depth_ms).is_finite()) || h.depth_ms >= self.baseline_ms {
                out.push(format!(
                    "{prefix}.hot_spots[{i}].depth_ms: must be in (0, baseline)"
                ));
            }
        }
    }

    /// Landscape with hot-spot centers pinned to the spectrum's
    /// singlet/T₋ crossings; widths and depths stay free parameters.
    pub fn with_spectrum_hotspots(
        device: &DeviceParams,
        widths_depths: &[(f64, f64)],
        baseline_ms: f64,
        v_onset_uv: f64,
        cubic_coeff: f64,
    ) -> Self {
        let centers = crate::spectrum::st_minus_crossings_uev(device);
        let hot_spots = centers
            .into_iter()
            .zip(widths_depths.iter().cycle())
            .map(|(center_uev, &(width_uev, depth_ms))| HotSpot {
                center_uev,
                width_uev,
                depth_ms,
            })
            .collect();
        T1Landscape {
            baseline_ms,
            hot_spots,
            v_onset_uv,
            cubic_coeff_per_ms_uv3: cubic_coeff,
        }
    }
}

/// T1 at a detuning and source-drain amplitude, ms.
pub fn t1_at(landscape: &T1Landscape, detuning_uev: f64, v_sd_uv: f64) -> f64 {
    let mut rate = 1.0 / landscape.baseline_ms;
    for h in &landscape.hot_spots {
        let excess = 1.0 / h.depth_ms - 1.0 / landscape.baseline_ms;
        let x = detuning_uev - h.center_uev;
        rate += excess * h.width_uev * h.width_uev / (x * x + h.width_uev * h.width_uev);
    }
    let over = (v_sd_uv - landscape.v_onset_uv).max(0.0);
    rate += landscape.cubic_coeff_per_ms_uv3 * over * over * over;
    1.0 / rate
}

/// Infidelity floor from relaxation during the measurement:
/// ½·(1 − exp(−t_meas/T1)). `t_meas` should include the settle dead time.
pub fn t1_fidelity_bound(t_meas_us: f64, t1_ms: f64) -> Result<f64> {
    if t_meas_us <= 0.0 || !t_meas_us.is_finite() || t1_ms <= 0.0 || !t1_ms.is_finite() {
        return Err(SimError::invalid(
            "t1_fidelity_bound: t_meas and T1 must be > 0",
        ));
    }
    Ok(0.5 * (1.0 - (-t_meas_us / (t1_ms * 1e3)).exp()))
}

/// Fitted 1/e time for one trial-measurement column.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum T1Fit {
    /// (T1 in ms, 1σ uncertainty in ms).
    Fitted { t1_ms: f64, err_ms: f64 },
    /// Decay not resolved within the scan: T1 exceeds the bound given.
    Censored { t1_exceeds_ms: f64 },
}

/// Result of the swept trial-measurement experiment.
#[derive(Debug, Clone)]
pub struct TrialMeasurement {
    pub detuning_uev: Vec<f64>,
    pub duration_ms: Vec<f64>,
    /// p_singlet[i][j]: detuning i, duration j.
    pub p_singlet: Vec<Vec<f64>>,
    pub t1_fits: Vec<T1Fit>,
}

/// Prepare a dephased state, hold it at a trial measurement bias for a
/// swept duration, then measure: P_S(ε, t) = 1 − P_T(0)·exp(−t/T1(ε, V)).
/// Shot noise is binomial with `shots_per_point` samples per pixel; each
/// column is then fit for its 1/e time.
pub fn trial_measurement_experiment(
    landscape: &T1Landscape,
    chain: &ChainParams,
    detuning_grid_uev: &[f64],
    duration_grid_ms: &[f64],
    shots_per_point: u64,
    seed: u64,
) -> Result<TrialMeasurement> {
    if detuning_grid_uev.is_empty() || duration_grid_ms.len() < 3 {
        return Err(SimError::invalid(
            "trial_measurement: need a detuning grid and >= 3 durations",
        ));
    }
    if shots_per_point == 0 {
        return Err(SimError::invalid("trial_measurement: zero shots"));
    }
    let p_t0 = 0.5; // dephased preparation
    let key = StreamKey::new(seed, "trial-measurement", 0);
    let max_t = duration_grid_ms
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);

    let mut p_singlet = Vec::with_capacity(detuning_grid_uev.len());
    let mut t1_fits = Vec::with_capacity(detuning_grid_uev.len());
    for (i, &eps) in detuning_grid_uev.iter().enumerate() {
        let t1 = t1_at(landscape, eps, chain.v_sd_uv);
        let mut rng = key.substream(i as u64).rng();
        let row: Vec<f64> = duration_grid_ms
            .iter()
            .map(|&t| {
                let p = 1.0 - p_t0 * (-t / t1).exp();
                let b = Binomial::new(shots_per_point, p.clamp(0.0, 1.0)).unwrap();
                b.sample(&mut rng) as f64 / shots_per_point as f64
            })
            .collect();
        t1_fits.push(fit_t1_column(
            duration_grid_ms,
            &row,
            shots_per_point,
            max_t,
        ));
        p_singlet.push(row);
    }
    Ok(TrialMeasurement {
        detuning_uev: detuning_grid_uev.to_vec(),
        duration_ms: duration_grid_ms.to_vec(),
        p_singlet,
        t1_fits,
    })
}

fn fit_t1_column(ts: &[f64], p_s: &[f64], shots: u64, max_t: f64) -> T1Fit {
    // Model P_S(t) = 1 − a·exp(−t/τ).
    let weights: Vec<f64> = p_s
        .iter()
        .map(|p| {
            let var = (p * (1.0 - p) / shots as f64).max(1e-9);
            1.0 / var.sqrt()
        })
        .collect();
    // Initial decay estimate from the first/last visible drop.
    let a0 = (1.0 - p_s[0]).max(1e-3);
    let tail = 1.0 - p_s[p_s.len() - 1];
    let tau0 = if tail > 0.5 * a0 {
        4.0 * max_t
    } else {
        let ratio = (tail / a0).max(1e-6);
        -(ts[ts.len() - 1] - ts[0]) / ratio.ln()
    };
    let fit = lm_fit(
        ts,
        p_s,
        &weights,
        &[a0, tau0.clamp(1e-4, 100.0 * max_t)],
        Some(&[(0.0, 1.0), (1e-6, 1e4 * max_t)]),
        |p, t| 1.0 - p[0] * (-t / p[1]).exp(),
    );
    match fit {
        Ok(out) => {
            let tau = out.params[1];
            let err = out.param_err(1);
            if tau > 2.0 * max_t || !err.is_finite() || err > tau {
                T1Fit::Censored {
                    t1_exceeds_ms: max_t,
                }
            } else {
                T1Fit::Fitted {
                    t1_ms: tau,
                    err_ms: err,
                }
            }
        }
        Err(_) => T1Fit::Censored {
            t1_exceeds_ms: max_t,
        },
    }
}

/// Combined infidelity floor per detuning: SNR bound plus T1 bound.
pub fn composite_fidelity_limit(
    snr_profile: &[f64],
    t1_profile_ms: &[f64],
    t_meas_us: f64,
) -> Result<Vec<f64>> {
    if snr_profile.len() != t1_profile_ms.len() {
        return Err(SimError::invalid(
            "composite_fidelity_limit: profiles must share a grid",
        ));
    }
    snr_profile
        .iter()
        .zip(t1_profile_ms)
        .map(|(&snr, &t1)| Ok(snr_fidelity_bound(snr)? + t1_fidelity_bound(t_meas_us, t1)?))
        .collect()
}
