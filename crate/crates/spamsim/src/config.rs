//! Experiment configuration: a single human-editable TOML file holding
//! every module's parameters plus per-experiment grids. Unknown keys are
//! rejected; validation reports every violation with its key path.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::benchmarking::ChannelModel;
use crate::error::{Result, SimError};
use crate::initialization::InitConfig;
use crate::mapping::MappingConfig;
use crate::readout::ChainParams;
use crate::relaxation::T1Landscape;
use crate::spectrum::DeviceParams;

/// A numeric grid: linear or logarithmic spacing.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub log: bool,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        (0..self.points)
            .map(|i| {
                let f = i as f64 / (self.points - 1) as f64;
                if self.log {
                    (self.start.ln() + (self.stop.ln() - self.start.ln()) * f).exp()
                } else {
                    self.start + (self.stop - self.start) * f
                }
            })
            .collect()
    }

    fn validate_into(&self, prefix: &str, out: &mut Vec<String>, min_points: usize) {
        if self.points < min_points {
            out.push(format!(
                "{prefix}.points: need at least {min_points}, got {}",
                self.points
            ));
        }
        if self.points > 1 && self.stop <= self.start {
            out.push(format!("{prefix}: stop must exceed start"));
        }
        if self.log && (self.start <= 0.0 || self.stop <= 0.0) {
            out.push(format!("{prefix}: log grids need positive endpoints"));
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every stochastic quantity derives from it.
    pub seed: u64,
    /// Default shot count for experiments that do not specify their own.
    pub shots: u64,
    pub output_dir: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrSurfaceConfig {
    pub t_int_ns: GridSpec,
    pub v_sd_uv: GridSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectroscopyConfig {
    pub detuning_uev: GridSpec,
    pub shots_per_point: u64,
    pub n_bins: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct T1MapConfig {
    pub detuning_uev: GridSpec,
    pub duration_ms: GridSpec,
    pub shots_per_point: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSweepConfig {
    pub bias_mv: GridSpec,
    pub duration_ns: GridSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlindRbConfig {
    pub lengths: Vec<u32>,
    pub sequences: u32,
    pub shots_per_sequence: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExchangeConfig {
    pub sweep_points: usize,
    pub shots_per_point: u32,
    /// SPAM infidelity injected into the oscillation experiment.
    pub spam_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingExperimentConfig {
    /// Shots per trajectory; defaults to run.shots when absent.
    pub shots: Option<u64>,
    /// Integration time of the (referenced) readout used here, ns.
    pub readout_t_int_ns: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    /// Quoted thermal-initialization figure for the table; the exact
    /// evaluation is reported alongside.
    pub boltzmann_quoted: Option<f64>,
    /// Observed SPAM infidelity to compare against.
    pub compare_observed: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentGrids {
    pub snr_surface: SnrSurfaceConfig,
    pub spectroscopy: SpectroscopyConfig,
    pub t1_map: T1MapConfig,
    pub init_sweep: InitSweepConfig,
    pub blind_rb: BlindRbConfig,
    pub exchange: ExchangeConfig,
    pub mapping: MappingExperimentConfig,
}

/// Full configuration of one simulated device and its experiments.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub device: DeviceParams,
    pub chain: ChainParams,
    pub landscape: T1Landscape,
    pub init: InitConfig,
    pub mapping: MappingConfig,
    pub channel: ChannelModel,
    pub run: RunConfig,
    pub budget: BudgetConfig,
    pub experiments: ExperimentGrids,
}

impl ExperimentConfig {
    /// Collect every invariant violation, path-qualified.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.device.validate_into("device", &mut out);
        self.chain.validate_into("chain", &mut out);
        self.landscape.validate_into("landscape", &mut out);
        self.init.validate_into("init", &mut out);
        self.mapping.validate_into("mapping", &mut out);
        self.channel.validate_into("channel", &mut out);
        if self.run.shots == 0 {
            out.push("run.shots: must be >= 1".into());
        }
        let g = &self.experiments;
        g.snr_surface
            .t_int_ns
            .validate_into("experiments.snr_surface.t_int_ns", &mut out, 2);
        g.snr_surface
            .v_sd_uv
            .validate_into("experiments.snr_surface.v_sd_uv", &mut out, 2);
        g.spectroscopy.detuning_uev.validate_into(
            "experiments.spectroscopy.detuning_uev",
            &mut out,
            2,
        );
        if g.spectroscopy.shots_per_point == 0 {
            out.push("experiments.spectroscopy.shots_per_point: must be >= 1".into());
        }
        if g.spectroscopy.n_bins == 0 {
            out.push("experiments.spectroscopy.n_bins: must be >= 1".into());
        }
        g.t1_map
            .detuning_uev
            .validate_into("experiments.t1_map.detuning_uev", &mut out, 2);
        // The per-column exponential fit needs at least 3 durations.
        g.t1_map
            .duration_ms
            .validate_into("experiments.t1_map.duration_ms", &mut out, 3);
        g.init_sweep
            .bias_mv
            .validate_into("experiments.init_sweep.bias_mv", &mut out, 2);
        g.init_sweep
            .duration_ns
            .validate_into("experiments.init_sweep.duration_ns", &mut out, 2);
        let mut distinct = g.blind_rb.lengths.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < 3 {
            out.push("experiments.blind_rb.lengths: need >= 3 distinct lengths".into());
        }
        if g.blind_rb.lengths.iter().any(|n| *n < 1) {
            out.push("experiments.blind_rb.lengths: lengths must be >= 1".into());
        }
        if g.blind_rb.sequences == 0 || g.blind_rb.shots_per_sequence == 0 {
            out.push("experiments.blind_rb: sequences and shots_per_sequence must be >= 1".into());
        }
        if g.exchange.sweep_points < 4 {
            out.push("experiments.exchange.sweep_points: need >= 4".into());
        }
        if g.exchange.shots_per_point == 0 {
            out.push("experiments.exchange.shots_per_point: must be >= 1".into());
        }
        if !(0.0..=0.375).contains(&g.exchange.spam_error) {
            out.push("experiments.exchange.spam_error: must be in [0, 0.375]".into());
        }
        if g.mapping.readout_t_int_ns <= 0.0 || !(g.mapping.readout_t_int_ns).is_finite() {
            out.push("experiments.mapping.readout_t_int_ns: must be > 0".into());
        }
        if let Some(b) = self.budget.boltzmann_quoted {
            if !(0.0..1.0).contains(&b) {
                out.push("budget.boltzmann_quoted: must be in [0, 1)".into());
            }
        }
        out
    }
}

/// Parse a config file; syntax errors carry line/column from the TOML
/// parser, and the type layer rejects unknown keys.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| SimError::Config(format!("{}: {e}", path.display())))
}

/// Validation report for the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub path: String,
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Load and fully validate a config file, listing all violations.
pub fn validate_config(path: &Path) -> Result<ValidationReport> {
    let config = load_config(path)?;
    Ok(ValidationReport {
        path: path.display().to_string(),
        violations: config.validate(),
    })
}
