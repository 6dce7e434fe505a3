//! Assembles per-mechanism infidelity contributions into a SPAM error
//! budget and inverts unexplained error into an implied excited-state
//! energy.

use serde::Serialize;

use crate::constants::thermal_energy_uev;
use crate::error::{Result, SimError};
use crate::initialization::equilibrium_population;
use crate::mapping::{plan_error, MappingConfig, T2Profile};
use crate::readout::{chain_snr, snr_fidelity_bound, ChainParams};
use crate::relaxation::{t1_at, t1_fidelity_bound, T1Landscape};
use crate::spectrum::DeviceParams;

/// One line of the budget.
#[derive(Debug, Clone, Serialize)]
pub struct BudgetEntry {
    pub label: String,
    pub contribution: f64,
    /// The module's exact evaluation when the tabulated contribution is
    /// a rounded/quoted figure.
    pub exact: Option<f64>,
    pub source: String,
}

/// Named contributions summing toward the observed SPAM infidelity.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorBudget {
    pub entries: Vec<BudgetEntry>,
    pub total: f64,
    pub observed_infidelity: Option<f64>,
    /// observed − total, floored at zero.
    pub missing: Option<f64>,
}

impl ErrorBudget {
    /// Attach an observed infidelity and compute the missing line.
    pub fn compare(mut self, observed: f64) -> Self {
        self.observed_infidelity = Some(observed);
        self.missing = Some((observed - self.total).max(0.0));
        self
    }

    /// Aligned-text rendering of the budget table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let width = self
            .entries
            .iter()
            .map(|e| e.label.len())
            .max()
            .unwrap_or(8)
            .max("missing (unexplained)".len());
        out.push_str(&format!(
            "{:<width$}  {:>12}\n",
            "factor",
            "contribution",
            width = width
        ));
        for e in &self.entries {
            let exact = e
                .exact
                .map(|x| format!("  (exact {:.2e})", x))
                .unwrap_or_default();
            out.push_str(&format!(
                "{:<width$}  {:>12.2e}{exact}\n",
                e.label,
                e.contribution,
                width = width
            ));
        }
        out.push_str(&format!(
            "{:<width$}  {:>12.2e}\n",
            "total",
            self.total,
            width = width
        ));
        if let (Some(obs), Some(missing)) = (self.observed_infidelity, self.missing) {
            out.push_str(&format!(
                "{:<width$}  {:>12.2e}\n",
                "observed",
                obs,
                width = width
            ));
            out.push_str(&format!(
                "{:<width$}  {:>12.2e}\n",
                "missing (unexplained)",
                missing,
                width = width
            ));
        }
        out
    }
}

/// Compute the four budget lines from the module models.
///
/// `boltzmann_quoted` optionally replaces the thermal-initialization
/// line with an externally quoted figure; the exact partition-function
/// evaluation is always reported alongside.
pub fn assemble_budget(
    device: &DeviceParams,
    chain: &ChainParams,
    landscape: &T1Landscape,
    mapping: &MappingConfig,
    boltzmann_quoted: Option<f64>,
) -> Result<ErrorBudget> {
    let boltz_exact = 1.0 - equilibrium_population(device).p_singlet;
    let snr = chain_snr(chain, device)?;
    let snr_entry = snr_fidelity_bound(snr)?;
    let t1 = t1_at(landscape, chain.measure_detuning_uev, chain.v_sd_uv);
    let t1_entry = t1_fidelity_bound(chain.t_meas_us(), t1)?;
    let profile = T2Profile::from_config(mapping, device);
    let t_c = device.tunnel_coupling_uev;
    let direct = plan_error(&mapping.plan_direct(), &profile, t_c)?;
    let via_idle = plan_error(&mapping.plan_via_idle(), &profile, t_c)?;
    // The budget charges mapping with the extra error of the idle round
    // trip; a dephasing flip reads wrong half the time.
    let map_entry = 0.5 * (via_idle.total - direct.total).max(0.0)
        + 0.5 * (via_idle.p_lz - direct.p_lz).max(0.0);

    let entries = vec![
        BudgetEntry {
            label: "Boltzmann distribution".into(),
            contribution: boltzmann_quoted.unwrap_or(boltz_exact),
            exact: Some(boltz_exact),
            source: "initialization".into(),
        },
        BudgetEntry {
            label: format!("SNR ({} ns integration)", chain.t_int_ns),
            contribution: snr_entry,
            exact: None,
            source: "readout".into(),
        },
        BudgetEntry {
            label: "T1 (measurement & settle)".into(),
            contribution: t1_entry,
            exact: None,
            source: "relaxation".into(),
        },
        BudgetEntry {
            label: "(1,1) mapping errors".into(),
            contribution: map_entry,
            exact: None,
            source: "mapping".into(),
        },
    ];
    let total = entries.iter().map(|e| e.contribution).sum();
    Ok(ErrorBudget {
        entries,
        total,
        observed_infidelity: None,
        missing: None,
    })
}

/// Invert an unexplained error fraction into the excited-state energy of
/// a two-level Boltzmann distribution at temperature `t_e_mk`:
/// p = exp(−βE)/(1 + exp(−βE)) solved for E, in µeV.
pub fn invert_missing_error(missing: f64, t_e_mk: f64) -> Result<f64> {
    if missing <= 0.0 || !missing.is_finite() {
        return Err(SimError::invalid(
            "invert_missing_error: missing fraction must be > 0",
        ));
    }
    if missing >= 0.5 {
        return Err(SimError::NoSolution(format!(
            "two-level occupation cannot exceed 1/2 (got {missing})"
        )));
    }
    if t_e_mk <= 0.0 || !(t_e_mk).is_finite() {
        return Err(SimError::invalid("invert_missing_error: T_e must be > 0"));
    }
    let kt = thermal_energy_uev(t_e_mk);
    Ok(kt * ((1.0 - missing) / missing).ln())
}

/// Forward two-level Boltzmann occupation for an energy in µeV.
pub fn forward_two_level(energy_uev: f64, t_e_mk: f64) -> f64 {
    let w = (-energy_uev / thermal_energy_uev(t_e_mk)).exp();
    w / (1.0 + w)
}
