//! Two-electron energy spectrum near the (1,1)–(2,0) anticrossing.
//!
//! Detuning convention: ε > 0 favors the (2,0) charge state. The (1,1)
//! branches are flat in ε; the (2,0) branches run as −ε plus their
//! excitation energy. Singlet and triplet sectors each hybridize across
//! the charge boundary with tunnel coupling t_c, giving avoided
//! crossings of gap 2·t_c. The triplet charge transition is displaced
//! from the singlet one by the two-electron singlet-triplet splitting
//! δ_ST = min(E_o, E_v): the window of detuning in between is where spin
//! and charge are correlated and Pauli-spin-blockade readout works.

use serde::{Deserialize, Serialize};

use crate::constants::{thermal_energy_uev, MU_B_UEV_PER_MT};
use crate::error::{Result, SimError};

/// Physical constants of one simulated device.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceParams {
    /// Two-electron orbital excited-state energy of the doubly occupied dot, µeV.
    pub e_orbital_uev: f64,
    /// Excited valley-state energy of the doubly occupied (outer) dot, µeV.
    pub e_valley_uev: f64,
    /// First excited-state energy of the gauge electron's dot, µeV.
    pub e_valley_gauge_uev: f64,
    /// Effective electron temperature, mK.
    pub t_electron_mk: f64,
    /// Applied magnetic field, mT.
    pub b_field_mt: f64,
    /// Tunnel coupling across the (1,1)-(2,0) boundary, µeV.
    pub tunnel_coupling_uev: f64,
    /// Electron g-factor.
    #[serde(default = "default_g_factor")]
    pub g_factor: f64,
}

fn default_g_factor() -> f64 {
    2.0
}

impl Default for DeviceParams {
    fn default() -> Self {
        DeviceParams {
            e_orbital_uev: 160.0,
            e_valley_uev: 250.0,
            e_valley_gauge_uev: 130.0,
            t_electron_mk: 220.0,
            b_field_mt: 1.5,
            tunnel_coupling_uev: 20.0,
            g_factor: 2.0,
        }
    }
}

impl DeviceParams {
    /// k_B·T_e in µeV.
    pub fn thermal_energy_uev(&self) -> f64 {
        thermal_energy_uev(self.t_electron_mk)
    }

    /// Singlet-triplet splitting of the doubly occupied dot,
    /// set by the smaller of the orbital and valley excitations.
    pub fn delta_st_uev(&self) -> f64 {
        self.e_orbital_uev.min(self.e_valley_uev)
    }

    /// Check invariants, pushing violations onto `out` with `prefix`-qualified names.
    pub fn validate_into(&self, prefix: &str, out: &mut Vec<String>) {
        let mut need_pos = |name: &str, v: f64| {
            if v <= 0.0 || !v.is_finite() {
                out.push(format!("{prefix}.{name}: must be > 0, got {v}"));
            }
        };
        need_pos("e_orbital_uev", self.e_orbital_uev);
        need_pos("e_valley_uev", self.e_valley_uev);
        need_pos("e_valley_gauge_uev", self.e_valley_gauge_uev);
        need_pos("t_electron_mk", self.t_electron_mk);
        need_pos("tunnel_coupling_uev", self.tunnel_coupling_uev);
        need_pos("g_factor", self.g_factor);
        if self.b_field_mt < 0.0 || !self.b_field_mt.is_finite() {
            out.push(format!(
                "{prefix}.b_field_mt: must be >= 0, got {}",
                self.b_field_mt
            ));
        }
    }
}

/// Zeeman splitting g·µ_B·B in µeV.
pub fn zeeman_splitting_uev(params: &DeviceParams) -> f64 {
    params.g_factor * MU_B_UEV_PER_MT * params.b_field_mt
}

/// Branch energies over a detuning grid, all in µeV.
#[derive(Debug, Clone)]
pub struct LevelDiagram {
    pub detuning_uev: Vec<f64>,
    /// Hybridized singlet ground branch, (2,0)-like at large ε.
    pub singlet_ground: Vec<f64>,
    /// Hybridized singlet excited branch.
    pub singlet_excited: Vec<f64>,
    /// T₋(1,1), T₀(1,1), T₊(1,1) Zeeman sublevels (flat).
    pub triplet11_minus: Vec<f64>,
    pub triplet11_zero: Vec<f64>,
    pub triplet11_plus: Vec<f64>,
    /// Hybridized triplet branches across the T(1,1)-T(2,0) orbital crossing.
    pub triplet_ground: Vec<f64>,
    pub triplet_excited: Vec<f64>,
    /// Diabatic (2,0) valley singlet/triplet shelf (fourfold near-degenerate).
    pub valley20: Vec<f64>,
    /// Charge character ⟨(2,0)⟩ of the singlet ground branch.
    pub singlet_charge_character: Vec<f64>,
}

/// ⟨(2,0)⟩ of the ground state of a two-level crossing centered at
/// `center`: ½(1 + (ε−center)/√((ε−center)² + 4t_c²)).
pub fn charge_character(detuning_uev: f64, center_uev: f64, t_c_uev: f64) -> f64 {
    let x = detuning_uev - center_uev;
    0.5 * (1.0 + x / (x * x + 4.0 * t_c_uev * t_c_uev).sqrt())
}

/// Eigenvalues of the 2×2 crossing {flat level at `e_flat`, sloped level
/// `e_flat + offset − ε`} with coupling t_c. Returns (ground, excited).
fn two_level_branches(eps: f64, e_flat: f64, offset: f64, t_c: f64) -> (f64, f64) {
    let d = e_flat + offset - eps; // diabatic (2,0) branch
    let mean = 0.5 * (e_flat + d);
    let half = 0.5 * ((e_flat - d).powi(2) + 4.0 * t_c * t_c).sqrt();
    (mean - half, mean + half)
}

/// Compute all branch energies on `grid` (strictly increasing, non-empty).
pub fn level_diagram(params: &DeviceParams, grid: &[f64]) -> Result<LevelDiagram> {
    if grid.is_empty() {
        return Err(SimError::invalid("level_diagram: empty detuning grid"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SimError::invalid(
            "level_diagram: detuning grid must be strictly increasing",
        ));
    }
    let t_c = params.tunnel_coupling_uev;
    let e_z = zeeman_splitting_uev(params);
    let e_o = params.e_orbital_uev;
    let e_v = params.e_valley_uev;

    let n = grid.len();
    let mut d = LevelDiagram {
        detuning_uev: grid.to_vec(),
        singlet_ground: Vec::with_capacity(n),
        singlet_excited: Vec::with_capacity(n),
        triplet11_minus: vec![-e_z; n],
        triplet11_zero: vec![0.0; n],
        triplet11_plus: vec![e_z; n],
        triplet_ground: Vec::with_capacity(n),
        triplet_excited: Vec::with_capacity(n),
        valley20: Vec::with_capacity(n),
        singlet_charge_character: Vec::with_capacity(n),
    };
    for &eps in grid {
        // Singlet sector: S(1,1) flat at 0, S(2,0) at −ε.
        let (g, e) = two_level_branches(eps, 0.0, 0.0, t_c);
        d.singlet_ground.push(g);
        d.singlet_excited.push(e);
        // Triplet sector: T(1,1) flat at 0, orbital T(2,0) at E_o − ε.
        let (tg, te) = two_level_branches(eps, 0.0, e_o, t_c);
        d.triplet_ground.push(tg);
        d.triplet_excited.push(te);
        // Valley shelf rides the (2,0) slope at +E_v.
        d.valley20.push(e_v - eps);
        d.singlet_charge_character
            .push(charge_character(eps, 0.0, t_c));
    }
    Ok(d)
}

/// Minimum separation of the hybridized singlet branches (the anticrossing gap).
pub fn singlet_anticrossing_gap_uev(params: &DeviceParams) -> f64 {
    // √(ε² + 4t_c²) is minimized at ε = 0.
    2.0 * params.tunnel_coupling_uev
}

/// Detuning interval where spin-to-charge conversion is usable: the
/// ground singlet is (2,0)-like while the lowest triplet is still
/// (1,1)-like, with a margin for tunnel curvature and thermal broadening.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeasureWindow {
    pub lo_uev: f64,
    pub hi_uev: f64,
    pub delta_st_uev: f64,
}

impl MeasureWindow {
    pub fn center_uev(&self) -> f64 {
        0.5 * (self.lo_uev + self.hi_uev)
    }

    pub fn width_uev(&self) -> f64 {
        self.hi_uev - self.lo_uev
    }

    pub fn contains(&self, eps: f64) -> bool {
        eps >= self.lo_uev && eps <= self.hi_uev
    }
}

/// Edge margin of the window: where the charge character has pulled to
/// ~0.8 of its asymptote (1.5·t_c) plus one thermal unit.
pub fn window_margin_uev(params: &DeviceParams) -> f64 {
    1.5 * params.tunnel_coupling_uev + params.thermal_energy_uev()
}

/// Compute the measure window, or fail if broadening closes it.
pub fn measure_window(params: &DeviceParams) -> Result<MeasureWindow> {
    let delta_st = params.delta_st_uev();
    let margin = window_margin_uev(params);
    let lo = margin;
    let hi = delta_st - margin;
    if hi <= lo {
        return Err(SimError::EmptyWindow(format!(
            "δ_ST = {delta_st:.1} µeV is closed by the {:.1} µeV broadening margin",
            margin
        )));
    }
    Ok(MeasureWindow {
        lo_uev: lo,
        hi_uev: hi,
        delta_st_uev: delta_st,
    })
}

/// Detunings where the T₋(1,1) level crosses singlet branches; these are
/// the natural anchors for relaxation hot spots. The residual exchange
/// on the (1,1) side pulls the singlet below T₋ once J(ε) < E_Z, giving
/// a crossing at ε = E_Z − t_c²/E_Z; the diabatic orbital and valley
/// (2,0) shelves cross T₋ at E_o + E_Z and E_v + E_Z.
pub fn st_minus_crossings_uev(params: &DeviceParams) -> Vec<f64> {
    let e_z = zeeman_splitting_uev(params);
    let t_c = params.tunnel_coupling_uev;
    if e_z <= 0.0 {
        return vec![];
    }
    vec![
        e_z - t_c * t_c / e_z,
        params.e_orbital_uev + e_z,
        params.e_valley_uev + e_z,
    ]
}
