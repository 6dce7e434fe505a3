//! Experiment orchestration: each named experiment runs the relevant
//! modules, writes plot-ready CSV plus a JSON summary, and archives the
//! config beside the outputs. Identical (config, seed) pairs produce
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::json;

use crate::benchmarking::{exchange_contrast, fit_brb, run_blind_rb, ExchangeInput};
use crate::budget::{assemble_budget, invert_missing_error};
use crate::config::ExperimentConfig;
use crate::error::{Result, SimError};
use crate::initialization::init_sweep_map;
use crate::mapping::{mapping_error_experiment, T2Profile};
use crate::readout::{
    chain_snr, snr_at, snr_fidelity_bound, snr_surface, spin_blockade_spectroscopy,
};
use crate::relaxation::{composite_fidelity_limit, t1_at, trial_measurement_experiment, T1Fit};

/// The named experiments exposed by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentName {
    SnrSurface,
    Spectroscopy,
    T1Map,
    InitSweep,
    Mapping,
    BlindRb,
    Exchange,
    Budget,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 8] = [
        ExperimentName::SnrSurface,
        ExperimentName::Spectroscopy,
        ExperimentName::T1Map,
        ExperimentName::InitSweep,
        ExperimentName::Mapping,
        ExperimentName::BlindRb,
        ExperimentName::Exchange,
        ExperimentName::Budget,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentName::SnrSurface => "snr-surface",
            ExperimentName::Spectroscopy => "spectroscopy",
            ExperimentName::T1Map => "t1-map",
            ExperimentName::InitSweep => "init-sweep",
            ExperimentName::Mapping => "mapping",
            ExperimentName::BlindRb => "blind-rb",
            ExperimentName::Exchange => "exchange",
            ExperimentName::Budget => "budget",
        }
    }
}

impl FromStr for ExperimentName {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentName::ALL
            .iter()
            .find(|e| e.as_str() == s)
            .copied()
            .ok_or_else(|| {
                SimError::invalid(format!(
                    "unknown experiment '{s}'; expected one of: {}",
                    ExperimentName::ALL
                        .iter()
                        .map(|e| e.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                ))
            })
    }
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub experiment: String,
    pub one_line: String,
    pub metrics: serde_json::Value,
    pub files: Vec<PathBuf>,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents)?;
    Ok(())
}

/// Run one experiment, writing artifacts into `out_dir`.
pub fn run_experiment(
    name: ExperimentName,
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<RunSummary> {
    let violations = config.validate();
    if !violations.is_empty() {
        return Err(SimError::Config(format!(
            "config has {} violation(s): {}",
            violations.len(),
            violations.join("; ")
        )));
    }
    fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();

    // Archive the config for reproducibility.
    let archived = out_dir.join("config.toml");
    let serialized = toml::to_string_pretty(config)
        .map_err(|e| SimError::Config(format!("config serialization failed: {e}")))?;
    write_file(&archived, &serialized)?;
    files.push(archived);

    let seed = config.run.seed;
    let mut summary = match name {
        ExperimentName::SnrSurface => run_snr_surface(config, out_dir, &mut files)?,
        ExperimentName::Spectroscopy => run_spectroscopy(config, seed, out_dir, &mut files)?,
        ExperimentName::T1Map => run_t1_map(config, seed, out_dir, &mut files)?,
        ExperimentName::InitSweep => run_init_sweep(config, out_dir, &mut files)?,
        ExperimentName::Mapping => run_mapping(config, seed, out_dir, &mut files)?,
        ExperimentName::BlindRb => run_blind_rb_experiment(config, seed, out_dir, &mut files)?,
        ExperimentName::Exchange => run_exchange(config, seed, out_dir, &mut files)?,
        ExperimentName::Budget => run_budget(config, out_dir, &mut files)?,
    };

    let summary_path = out_dir.join("summary.json");
    let doc = json!({
        "experiment": summary.experiment,
        "seed": seed,
        "summary": summary.one_line,
        "metrics": summary.metrics,
    });
    write_file(&summary_path, &serde_json::to_string_pretty(&doc).unwrap())?;
    files.push(summary_path);
    summary.files = files;
    Ok(summary)
}

fn run_snr_surface(
    config: &ExperimentConfig,
    out_dir: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<RunSummary> {
    let g = &config.experiments.snr_surface;
    let t_grid = g.t_int_ns.values();
    let v_grid = g.v_sd_uv.values();
    let surf = snr_surface(&config.chain, &config.device, &t_grid, &v_grid)?;
    let mut csv = String::from("t_int_ns,v_sd_uv,snr\n");
    let mut best = (0.0f64, 0.0, 0.0);
    for (i, &t) in t_grid.iter().enumerate() {
        for (j, &v) in v_grid.iter().enumerate() {
            let s = surf[i][j];
            if s > best.0 {
                best = (s, t, v);
            }
            writeln!(csv, "{t},{v},{s}").unwrap();
        }
    }
    let path = out_dir.join("snr_surface.csv");
    write_file(&path, &csv)?;
    files.push(path);
    let operating = chain_snr(&config.chain, &config.device)?;
    Ok(RunSummary {
        experiment: "snr-surface".into(),
        one_line: format!(
            "snr-surface: operating SNR {operating:.2}, peak {:.2} at t_int {:.0} ns / V_sd {:.0} µV",
            best.0, best.1, best.2
        ),
        metrics: json!({
            "operating_snr": operating,
            "peak_snr": best.0,
            "peak_t_int_ns": best.1,
            "peak_v_sd_uv": best.2,
        }),
        files: Vec::new(),
    })
}

fn run_spectroscopy(
    config: &ExperimentConfig,
    seed: u64,
    out_dir: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<RunSummary> {
    let g = &config.experiments.spectroscopy;
    let grid = g.detuning_uev.values();
    let spec = spin_blockade_spectroscopy(
        &config.chain,
        &config.device,
        &grid,
        g.shots_per_point as usize,
        seed,
        g.n_bins,
    )?;
    let mut csv = String::from("detuning_uev,bin_lo_pa,bin_hi_pa,count\n");
    for (i, &eps) in spec.detuning_uev.iter().enumerate() {
        for (j, &c) in spec.counts[i].iter().enumerate() {
            writeln!(
                csv,
                "{eps},{},{},{c}",
                spec.bin_edges_pa[j],
                spec.bin_edges_pa[j + 1]
            )
            .unwrap();
        }
    }
    let path = out_dir.join("spectroscopy.csv");
    write_file(&path, &csv)?;
    files.push(path);
    Ok(RunSummary {
        experiment: "spectroscopy".into(),
        one_line: format!(
            "spectroscopy: {} detuning points x {} shots, window [{:.1}, {:.1}] µeV",
            grid.len(),
            g.shots_per_point,
            crate::spectrum::measure_window(&config.device)?.lo_uev,
            crate::spectrum::measure_window(&config.device)?.hi_uev,
        ),
        metrics: json!({
            "points": grid.len(),
            "shots_per_point": g.shots_per_point,
        }),
        files: Vec::new(),
    })
}

fn run_t1_map(
    config: &ExperimentConfig,
    seed: u64,
    out_dir: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<RunSummary> {
    let g = &config.experiments.t1_map;
    let eps_grid = g.detuning_uev.values();
    let t_grid = g.duration_ms.values();
    let trial = trial_measurement_experiment(
        &config.landscape,
        &config.chain,
        &eps_grid,
        &t_grid,
        g.shots_per_point,
        seed,
    )?;

    let mut csv = String::from("detuning_uev,duration_ms,p_singlet\n");
    for (i, &eps) in trial.detuning_uev.iter().enumerate() {
        for (j, &t) in trial.duration_ms.iter().enumerate() {
            writeln!(csv, "{eps},{t},{}", trial.p_singlet[i][j]).unwrap();
        }
    }
    let path = out_dir.join("t1_map.csv");
    write_file(&path, &csv)?;
    files.push(path);

    let mut csv = String::from("detuning_uev,t1_ms,t1_err_ms,censored\n");
    for (i, &eps) in trial.detuning_uev.iter().enumerate() {
        match trial.t1_fits[i] {
            T1Fit::Fitted { t1_ms, err_ms } => {
                writeln!(csv, "{eps},{t1_ms},{err_ms},0").unwrap();
            }
            T1Fit::Censored { t1_exceeds_ms } => {
                writeln!(csv, "{eps},{t1_exceeds_ms},,1").unwrap();
            }
        }
    }
    let path = out_dir.join("t1_fits.csv");
    write_file(&path, &csv)?;
    files.push(path);

    // Composite fidelity limit along the same detuning axis.
    let snr_profile: Vec<f64> = eps_grid
        .iter()
        .map(|&eps| {
            snr_at(
                &config.chain,
                &config.device,
                eps,
                config.chain.t_int_ns,
                config.chain.v_sd_uv,
                false,
            )
            .map(|s| s.max(0.0))
        })
        .collect::<Result<_>>()?;
    let t1_profile: Vec<f64> = eps_grid
        .iter()
        .map(|&eps| t1_at(&config.landscape, eps, config.chain.v_sd_uv))
        .collect();
    let composite = composite_fidelity_limit(&snr_profile, &t1_profile, config.chain.t_meas_us())?;
    let mut csv = String::from("detuning_uev,snr,t1_ms,snr_bound,t1_bound,composite_bound\n");
    for (i, &eps) in eps_grid.iter().enumerate() {
        let sb = snr_fidelity_bound(snr_profile[i])?;
        let tb = composite[i] - sb;
        writeln!(
            csv,
            "{eps},{},{},{sb},{tb},{}",
            snr_profile[i], t1_profile[i], composite[i]
        )
        .unwrap();
    }
    let path = out_dir.join("composite_limit.csv");
    write_file(&path, &csv)?;
    files.push(path);

    let argmax_snr = snr_profile
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| eps_grid[i])
        .unwrap();
    let argmin_comp = composite
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| eps_grid[i])
        .unwrap();
    Ok(RunSummary {
        experiment: "t1-map".into(),
        one_line: format!(
            "t1-map: SNR peaks at {argmax_snr:.1} µeV, composite optimum at {argmin_comp:.1} µeV"
        ),
        metrics: json!({
            "snr_argmax_uev": argmax_snr,
            "composite_argmin_uev": argmin_comp,
            "t1_at_operating_ms": t1_at(&config.landscape, config.chain.measure_detuning_uev, config.chain.v_sd_uv),
        }),
        files: Vec::new(),
    })
}

fn run_init_sweep(
    config: &ExperimentConfig,
    out_dir: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<RunSummary> {
    let g = &config.experiments.init_sweep;
    let bias = g.bias_mv.values();
    let durations = g.duration_ns.values();
    let map = init_sweep_map(&config.init, &config.device, &bias, &durations)?;
    let mut csv = String::from("bias_mv,duration_ns,p_triplet_measured\n");
    for (i, &b) in bias.iter().enumerate() {
        for (j, &t) in durations.iter().enumerate() {
            writeln!(csv, "{b},{t},{}", map[i][j]).unwrap();
        }
    }
    let path = out_dir.join("init_sweep.csv");
    write_file(&path, &csv)?;
    files.push(path);

    // Asymptote at the configured bias and the longest duration.
    let asym = {
        let flush = crate::initialization::flush_with_drift(
            &config.init,
            &config.device,
            &crate::initialization::EncodedState::dephased(),
            &[*durations.last().unwrap()],
        )?;
        flush.states[0].measured_triplet_fraction(1.0)
    };
    Ok(RunSummary {
        experiment: "init-sweep".into(),
        one_line: format!(
            "init-sweep: asymptotic measured-triplet fraction {asym:.2e} at configured bias"
        ),
        metrics: json!({ "asymptotic_triplet_fraction": asym }),
        files: Vec::new(),
    })
}

fn run_mapping(
    config: &ExperimentConfig,
    seed: u64,
    out_dir: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<RunSummary> {
    let g = &config.experiments.mapping;
    let shots = g.shots.unwrap_or(config.run.shots) as usize;
    let profile = T2Profile::from_config(&config.mapping, &config.device);
    // High-SNR referenced readout for this experiment: misassignment from
    // the chain at the configured long integration.
    let misassign = {
        let mut chain = config.chain.clone();
        chain.t_int_ns = g.readout_t_int_ns;
        let snr = snr_at(
            &chain,
            &config.device,
            chain.measure_detuning_uev,
            chain.t_int_ns,
            chain.v_sd_uv,
            true,
        )?;
        snr_fidelity_bound(snr)?
    };
    let out = mapping_error_experiment(
        &config.mapping.plan_direct(),
        &config.mapping.plan_via_idle(),
        &config.device,
        &profile,
        misassign,
        shots,
        seed,
    )?;
    let mut csv = String::from("trajectory,triplet_fraction\n");
    writeln!(csv, "direct,{}", out.triplet_fraction_direct).unwrap();
    writeln!(csv, "via_idle,{}", out.triplet_fraction_via_idle).unwrap();
    writeln!(csv, "difference,{}", out.difference).unwrap();
    let path = out_dir.join("mapping.csv");
    write_file(&path, &csv)?;
    files.push(path);
    Ok(RunSummary {
        experiment: "mapping".into(),
        one_line: format!(
            "mapping: direct {:.2e}, via idle {:.2e}, difference {:.2e}",
            out.triplet_fraction_direct, out.triplet_fraction_via_idle, out.difference
        ),
        metrics: json!({
            "triplet_fraction_direct": out.triplet_fraction_direct,
            "triplet_fraction_via_idle": out.triplet_fraction_via_idle,
            "difference": out.difference,
            "readout_misassignment": misassign,
        }),
        files: Vec::new(),
    })
}

fn run_blind_rb_experiment(
    config: &ExperimentConfig,
    seed: u64,
    out_dir: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<RunSummary> {
    let g = &config.experiments.blind_rb;
    let curves = run_blind_rb(
        &config.channel,
        &g.lengths,
        g.sequences,
        g.shots_per_sequence,
        seed,
    )?;
    let mut csv = String::from("length,y0_mean,y0_err,y1_mean,y1_err\n");
    for (i, &n) in curves.lengths.iter().enumerate() {
        writeln!(
            csv,
            "{n},{},{},{},{}",
            curves.y0[i].mean, curves.y0[i].std_err, curves.y1[i].mean, curves.y1[i].std_err
        )
        .unwrap();
    }
    let path = out_dir.join("rb_curves.csv");
    write_file(&path, &csv)?;
    files.push(path);

    let fit = fit_brb(&curves)?;
    let report = json!({
        "a": fit.a,
        "b": fit.b,
        "c": fit.c,
        "p": fit.p,
        "q": fit.q,
        "param_errs": fit.param_errs,
        "chi2": fit.chi2,
        "n_points": fit.n_points,
        "boundary_warning": fit.boundary_warning,
        "f_bc_infidelity": fit.f_bc_infidelity(),
        "per_clifford_error": fit.per_clifford_error(),
        // Ground-truth channel rates for reference against the fit.
        "model_leak_out": config.channel.leak_out,
        "model_leak_in": config.channel.leak_in,
        "model_q_equivalent": config.channel.leak_out + config.channel.leak_in,
    });
    let path = out_dir.join("rb_fit.json");
    write_file(&path, &serde_json::to_string_pretty(&report).unwrap())?;
    files.push(path);

    Ok(RunSummary {
        experiment: "blind-rb".into(),
        one_line: format!(
            "blind-rb: 1-F_BC = {:.2e}, per-Clifford error {:.2e}, q = {:.2e}",
            fit.f_bc_infidelity(),
            fit.per_clifford_error(),
            fit.q
        ),
        metrics: report,
        files: Vec::new(),
    })
}

fn run_exchange(
    config: &ExperimentConfig,
    seed: u64,
    out_dir: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<RunSummary> {
    let g = &config.experiments.exchange;
    let angles: Vec<f64> = (0..g.sweep_points)
        .map(|i| i as f64 / (g.sweep_points - 1) as f64 * 2.0 * std::f64::consts::PI)
        .collect();
    let out = exchange_contrast(
        g.spam_error,
        &angles,
        g.shots_per_point,
        seed,
        ExchangeInput::Ground,
    )?;
    let mut csv = String::from("angle_rad,p_singlet_ideal\n");
    for &a in &angles {
        writeln!(csv, "{a},{}", (5.0 + 3.0 * a.cos()) / 8.0).unwrap();
    }
    let path = out_dir.join("exchange_sweep.csv");
    write_file(&path, &csv)?;
    files.push(path);
    Ok(RunSummary {
        experiment: "exchange".into(),
        one_line: format!(
            "exchange: contrast {:.4}, implied SPAM infidelity {:.2e}",
            out.observed_contrast, out.implied_spam_infidelity
        ),
        metrics: json!({
            "observed_contrast": out.observed_contrast,
            "implied_spam_infidelity": out.implied_spam_infidelity,
            "injected_spam_error": g.spam_error,
        }),
        files: Vec::new(),
    })
}

fn run_budget(
    config: &ExperimentConfig,
    out_dir: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<RunSummary> {
    run_budget_with_compare(config, out_dir, files, config.budget.compare_observed)
}

/// Budget assembly with an optional observed infidelity to explain.
pub fn run_budget_with_compare(
    config: &ExperimentConfig,
    out_dir: &Path,
    files: &mut Vec<PathBuf>,
    compare: Option<f64>,
) -> Result<RunSummary> {
    let mut budget = assemble_budget(
        &config.device,
        &config.chain,
        &config.landscape,
        &config.mapping,
        config.budget.boltzmann_quoted,
    )?;
    let mut implied_energy = None;
    if let Some(obs) = compare {
        budget = budget.compare(obs);
        if let Some(missing) = budget.missing {
            if missing > 0.0 && missing < 0.5 {
                implied_energy = Some(invert_missing_error(missing, config.device.t_electron_mk)?);
            }
        }
    }
    let table = budget.to_table();
    let path = out_dir.join("budget.txt");
    write_file(&path, &table)?;
    files.push(path);
    let doc = json!({
        "budget": budget,
        "implied_gauge_energy_uev": implied_energy,
    });
    let path = out_dir.join("budget.json");
    write_file(&path, &serde_json::to_string_pretty(&doc).unwrap())?;
    files.push(path);

    let one_line = match (budget.missing, implied_energy) {
        (Some(m), Some(e)) => format!(
            "budget: total {:.2e}, missing {:.2e} -> implied gauge excitation {:.0} µeV",
            budget.total, m, e
        ),
        _ => format!("budget: total {:.2e}", budget.total),
    };
    Ok(RunSummary {
        experiment: "budget".into(),
        one_line,
        metrics: doc,
        files: Vec::new(),
    })
}
