//! Bias trajectories between initialization, idle, and measurement, and
//! the errors they accumulate: Landau-Zener excitation at the charge
//! anticrossing and magnetic dephasing where the singlet-triplet
//! splitting is small.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::HBAR_UEV_NS;
use crate::error::{Result, SimError};
use crate::initialization::{equilibrium_population, gauge_excited_fraction, EncodedState};
use crate::rng::StreamKey;
use crate::spectrum::DeviceParams;

/// How a segment moves between coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentMode {
    /// Instantaneous; crossing the anticrossing in a jump is fully diabatic.
    Jump,
    /// Linear ramp over the stated duration.
    Ramp,
}

/// One leg of a bias trajectory in detuning space.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampSegment {
    pub from_uev: f64,
    pub to_uev: f64,
    pub duration_ns: f64,
    pub mode: SegmentMode,
}

/// An ordered bias trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RampPlan {
    pub segments: Vec<RampSegment>,
}

impl RampPlan {
    pub fn validate_into(&self, prefix: &str, out: &mut Vec<String>) {
        for (i, s) in self.segments.iter().enumerate() {
            match s.mode {
                SegmentMode::Jump => {
                    if s.duration_ns != 0.0 {
                        out.push(format!(
                            "{prefix}.segments[{i}]: jump segments have duration 0 by convention"
                        ));
                    }
                }
                SegmentMode::Ramp => {
                    if s.duration_ns <= 0.0 || !(s.duration_ns).is_finite() {
                        out.push(format!("{prefix}.segments[{i}]: ramp duration must be > 0"));
                    }
                }
            }
        }
        for w in self.segments.windows(2) {
            if (w[0].to_uev - w[1].from_uev).abs() > 1e-9 {
                out.push(format!("{prefix}: segments are not contiguous"));
            }
        }
    }

    pub fn total_duration_ns(&self) -> f64 {
        self.segments.iter().map(|s| s.duration_ns).sum()
    }
}

/// Entry coordinates and timing of the standard two-step trajectories.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingConfig {
    /// Entry point just outside the (2,0)-(1,1) boundary (positive detuning), µeV.
    pub entry_outside_uev: f64,
    /// Entry point just inside the (1,1) cell (negative detuning), µeV.
    pub entry_inside_uev: f64,
    /// Ramp duration through the anticrossing, ns.
    pub ramp_ns: f64,
    /// Idle coordinate deep in (1,1), µeV.
    pub idle_uev: f64,
    /// Dwell at idle during the via-idle trajectory, ns.
    pub dwell_idle_ns: f64,
    /// Measurement coordinate inside the window, µeV.
    pub measure_uev: f64,
    /// Initialization exit coordinate deep in (2,0), µeV.
    pub init_exit_uev: f64,
    /// Hyperfine-limited dephasing time at idle, ns.
    pub t2_idle_ns: f64,
    /// Hyperfine energy scale entering the T2* enhancement, µeV.
    pub sigma_hf_uev: f64,
}

impl Default for MappingConfig {
    fn default() -> Self {
        MappingConfig {
            entry_outside_uev: 40.0,
            entry_inside_uev: -20.0,
            ramp_ns: 100.0,
            idle_uev: -300.0,
            dwell_idle_ns: 0.0,
            measure_uev: 95.0,
            init_exit_uev: 300.0,
            t2_idle_ns: 1400.0,
            sigma_hf_uev: 0.1,
        }
    }
}

impl MappingConfig {
    pub fn validate_into(&self, prefix: &str, out: &mut Vec<String>) {
        if self.ramp_ns <= 0.0 || !(self.ramp_ns).is_finite() {
            out.push(format!("{prefix}.ramp_ns: must be > 0"));
        }
        if self.t2_idle_ns <= 0.0 || !(self.t2_idle_ns).is_finite() {
            out.push(format!("{prefix}.t2_idle_ns: must be > 0"));
        }
        if self.sigma_hf_uev <= 0.0 || !(self.sigma_hf_uev).is_finite() {
            out.push(format!("{prefix}.sigma_hf_uev: must be > 0"));
        }
        if self.dwell_idle_ns < 0.0 {
            out.push(format!("{prefix}.dwell_idle_ns: must be >= 0"));
        }
        if self.entry_outside_uev <= 0.0 || self.entry_inside_uev >= 0.0 {
            out.push(format!(
                "{prefix}: entry points must bracket the anticrossing (outside > 0 > inside)"
            ));
        }
    }

    /// Direct trajectory: initialization exit straight to measurement,
    /// staying on the (2,0) side of the anticrossing.
    pub fn plan_direct(&self) -> RampPlan {
        RampPlan {
            segments: vec![
                RampSegment {
                    from_uev: self.init_exit_uev,
                    to_uev: self.entry_outside_uev,
                    duration_ns: 0.0,
                    mode: SegmentMode::Jump,
                },
                RampSegment {
                    from_uev: self.entry_outside_uev,
                    to_uev: self.measure_uev,
                    duration_ns: self.ramp_ns,
                    mode: SegmentMode::Ramp,
                },
            ],
        }
    }

    /// Via-idle trajectory: ramp through the anticrossing into (1,1),
    /// jump to idle, dwell, jump back, ramp out to measurement.
    pub fn plan_via_idle(&self) -> RampPlan {
        let mut segments = vec![
            RampSegment {
                from_uev: self.init_exit_uev,
                to_uev: self.entry_outside_uev,
                duration_ns: 0.0,
                mode: SegmentMode::Jump,
            },
            RampSegment {
                from_uev: self.entry_outside_uev,
                to_uev: self.entry_inside_uev,
                duration_ns: self.ramp_ns,
                mode: SegmentMode::Ramp,
            },
            RampSegment {
                from_uev: self.entry_inside_uev,
                to_uev: self.idle_uev,
                duration_ns: 0.0,
                mode: SegmentMode::Jump,
            },
        ];
        if self.dwell_idle_ns > 0.0 {
            segments.push(RampSegment {
                from_uev: self.idle_uev,
                to_uev: self.idle_uev,
                duration_ns: self.dwell_idle_ns,
                mode: SegmentMode::Ramp,
            });
        }
        segments.push(RampSegment {
            from_uev: self.idle_uev,
            to_uev: self.entry_inside_uev,
            duration_ns: 0.0,
            mode: SegmentMode::Jump,
        });
        segments.push(RampSegment {
            from_uev: self.entry_inside_uev,
            to_uev: self.measure_uev,
            duration_ns: self.ramp_ns,
            mode: SegmentMode::Ramp,
        });
        RampPlan { segments }
    }
}

/// Diabatic transition probability for sweeping an avoided crossing of
/// coupling t_c at a detuning rate `rate` (µeV/ns):
/// P = exp(−2π·t_c²/(ħ·rate)).
pub fn lz_probability(t_c_uev: f64, rate_uev_per_ns: f64) -> Result<f64> {
    if t_c_uev <= 0.0
        || !t_c_uev.is_finite()
        || rate_uev_per_ns <= 0.0
        || !rate_uev_per_ns.is_finite()
    {
        return Err(SimError::invalid(
            "lz_probability: t_c and sweep rate must be > 0",
        ));
    }
    Ok((-2.0 * std::f64::consts::PI * t_c_uev * t_c_uev / (HBAR_UEV_NS * rate_uev_per_ns)).exp())
}

/// Singlet-triplet energy gap along the detuning axis: the residual
/// exchange J(ε) deep in (1,1), crossing over to the full charge gap on
/// the (2,0) side.
pub fn st_gap_uev(detuning_uev: f64, t_c_uev: f64) -> f64 {
    0.5 * ((detuning_uev * detuning_uev + 4.0 * t_c_uev * t_c_uev).sqrt() + detuning_uev)
}

/// T2*(ε) profile: hyperfine-limited at idle, suppressed quadratically
/// in the gap where the splitting dominates the hyperfine scale, floored
/// at the idle value.
#[derive(Debug, Clone, Copy)]
pub struct T2Profile {
    pub t2_idle_ns: f64,
    pub sigma_hf_uev: f64,
    pub gap_idle_uev: f64,
    pub t_c_uev: f64,
}

impl T2Profile {
    pub fn from_config(cfg: &MappingConfig, device: &DeviceParams) -> Self {
        T2Profile {
            t2_idle_ns: cfg.t2_idle_ns,
            sigma_hf_uev: cfg.sigma_hf_uev,
            gap_idle_uev: st_gap_uev(cfg.idle_uev, device.tunnel_coupling_uev),
            t_c_uev: device.tunnel_coupling_uev,
        }
    }

    pub fn t2_at(&self, detuning_uev: f64) -> f64 {
        let gap = st_gap_uev(detuning_uev, self.t_c_uev);
        let s2 = self.sigma_hf_uev * self.sigma_hf_uev;
        let enhancement = (s2 + gap * gap) / (s2 + self.gap_idle_uev * self.gap_idle_uev);
        self.t2_idle_ns * enhancement.max(1.0)
    }
}

/// Error mechanisms accumulated along a trajectory.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MappingErrorBreakdown {
    /// Combined Landau-Zener excitation probability over all crossings.
    pub p_lz: f64,
    /// ∫ dt / T2*(ε(t)) over all ramp segments.
    pub dephasing_exponent: f64,
    /// 1 − (1 − P_LZ)·exp(−dephasing exponent).
    pub total: f64,
}

/// Accumulate Landau-Zener and dephasing errors along a plan.
pub fn plan_error(
    plan: &RampPlan,
    profile: &T2Profile,
    t_c_uev: f64,
) -> Result<MappingErrorBreakdown> {
    let mut survive_lz = 1.0;
    for seg in &plan.segments {
        let crosses = (seg.from_uev > 0.0) != (seg.to_uev > 0.0);
        match seg.mode {
            SegmentMode::Jump => {
                if crosses {
                    // Instantaneous traversal: fully diabatic.
                    survive_lz = 0.0;
                }
            }
            SegmentMode::Ramp => {
                if seg.duration_ns <= 0.0 {
                    return Err(SimError::invalid("plan_error: ramp with zero duration"));
                }
                if crosses {
                    let rate = (seg.to_uev - seg.from_uev).abs() / seg.duration_ns;
                    survive_lz *= 1.0 - lz_probability(t_c_uev, rate)?;
                }
            }
        }
    }
    let exponent = dephasing_exponent(plan, profile)?;
    let p_lz = 1.0 - survive_lz;
    Ok(MappingErrorBreakdown {
        p_lz,
        dephasing_exponent: exponent,
        total: 1.0 - (1.0 - p_lz) * (-exponent).exp(),
    })
}

/// Dephasing error accumulated along a plan's ramp segments:
/// 1 − exp(−∫ dt/T2*(ε(t))). Jumps contribute nothing.
pub fn ramp_dephasing(plan: &RampPlan, profile: &T2Profile) -> Result<f64> {
    Ok(1.0 - (-dephasing_exponent(plan, profile)?).exp())
}

fn dephasing_exponent(plan: &RampPlan, profile: &T2Profile) -> Result<f64> {
    let mut exponent = 0.0;
    for seg in &plan.segments {
        if seg.mode != SegmentMode::Ramp {
            continue;
        }
        if seg.duration_ns <= 0.0 {
            return Err(SimError::invalid("dephasing: ramp with zero duration"));
        }
        // Simpson over the segment.
        let n = 200;
        let h = seg.duration_ns / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let frac = i as f64 / n as f64;
            let eps = seg.from_uev + (seg.to_uev - seg.from_uev) * frac;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w / profile.t2_at(eps);
        }
        exponent += acc * h / 3.0;
    }
    Ok(exponent)
}

/// Outcome of the paired mapping experiment.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MappingExperiment {
    pub triplet_fraction_direct: f64,
    pub triplet_fraction_via_idle: f64,
    pub difference: f64,
}

/// Simulate init → [trajectory] → measure for the direct and via-idle
/// plans and report the measured triplet fractions. The measurement is
/// the high-SNR referenced configuration, so misassignment is supplied
/// by `readout_misassignment` (typically negligible).
pub fn mapping_error_experiment(
    plan_direct: &RampPlan,
    plan_via_idle: &RampPlan,
    device: &DeviceParams,
    profile: &T2Profile,
    readout_misassignment: f64,
    n_shots: usize,
    seed: u64,
) -> Result<MappingExperiment> {
    if n_shots == 0 {
        return Err(SimError::invalid("mapping_error_experiment: zero shots"));
    }
    let init_state = {
        let mut s = equilibrium_population(device);
        let g = gauge_excited_fraction(device);
        let scale = 1.0 - g;
        s.p_singlet *= scale;
        s.p_triplet *= scale;
        s.leak.orbital20 *= scale;
        s.leak.valley20 *= scale;
        s.leak.gauge = g;
        s
    };
    let t_c = device.tunnel_coupling_uev;
    let frac_direct = run_plan_shots(
        plan_direct,
        &init_state,
        profile,
        t_c,
        readout_misassignment,
        n_shots,
        StreamKey::new(seed, "mapping-direct", 0),
    )?;
    let frac_idle = run_plan_shots(
        plan_via_idle,
        &init_state,
        profile,
        t_c,
        readout_misassignment,
        n_shots,
        StreamKey::new(seed, "mapping-via-idle", 0),
    )?;
    Ok(MappingExperiment {
        triplet_fraction_direct: frac_direct,
        triplet_fraction_via_idle: frac_idle,
        difference: frac_idle - frac_direct,
    })
}

fn run_plan_shots(
    plan: &RampPlan,
    state: &EncodedState,
    profile: &T2Profile,
    t_c_uev: f64,
    readout_misassignment: f64,
    n_shots: usize,
    key: StreamKey,
) -> Result<f64> {
    let err = plan_error(plan, profile, t_c_uev)?;
    // Dephasing mixes S with T₀: a dephased singlet reads triplet half
    // the time. Landau-Zener failures strand the state on the excited
    // branch, which is blocked and reads triplet.
    let p_deph_flip = 0.5 * (1.0 - (-err.dephasing_exponent).exp());
    let p_singlet_like = state.p_singlet + state.leak.gauge;
    // One counter-addressed stream per block of shots: deterministic and
    // order-independent without paying a stream setup per shot.
    const BLOCK: usize = 4096;
    let n_blocks = n_shots.div_ceil(BLOCK);
    let triplet_count: usize = (0..n_blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = key.substream(block as u64).rng();
            let shots_here = BLOCK.min(n_shots - block * BLOCK);
            let mut count = 0usize;
            for _ in 0..shots_here {
                let u: f64 = rng.gen();
                // Category: singlet-like (incl. gauge) vs blocked.
                let mut reads_triplet = if u < p_singlet_like {
                    let lz: f64 = rng.gen();
                    if lz < err.p_lz {
                        true
                    } else {
                        rng.gen::<f64>() < p_deph_flip
                    }
                } else {
                    // Blocked populations stay blocked; dephasing can
                    // symmetrize the qubit triplet back toward singlet.
                    let is_qubit_triplet = u < p_singlet_like + state.p_triplet;
                    if is_qubit_triplet {
                        rng.gen::<f64>() >= p_deph_flip
                    } else {
                        true
                    }
                };
                if rng.gen::<f64>() < readout_misassignment {
                    reads_triplet = !reads_triplet;
                }
                count += usize::from(reads_triplet);
            }
            count
        })
        .sum();
    Ok(triplet_count as f64 / n_shots as f64)
}
