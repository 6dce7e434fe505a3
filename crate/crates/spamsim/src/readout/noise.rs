//! Noise statistics of the square-wave demodulated charge-sensor chain.
//!
//! The demodulated observable is the peak-to-peak current estimate
//!
//! ```text
//! y = (2/T) ∫₀ᵀ s(t)·I(t) dt,     s(t) = ±1 square wave
//! ```
//!
//! White noise sources (HEMT input, sense-resistor Johnson, shot noise)
//! pass this filter with an equivalent noise bandwidth of 2/T referred to
//! the peak-to-peak output, so σ² = 4·S_I/(2T) and σ ∝ 1/√T. Charge
//! noise on the sensor gate with power spectral density A²/f rides the
//! conductance and is re-demodulated back to baseband: it sees a plain
//! boxcar, which does not average away. With an immediately subsequent
//! reference measurement subtracted the 1/f contribution closes to
//! 16·ln2·G_m²·A², giving the referenced histogram variance
//!
//! ```text
//! σ_I² = 2·σ_SD² + 16·ln2·G_m²·A².
//! ```
//!
//! Without a reference the boxcar-filtered 1/f variance depends
//! logarithmically on the lowest resolved frequency, taken as
//! 1/T_experiment.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rustfft::FftPlanner;

use crate::error::{Result, SimError};

/// ln(2); the referenced 1/f variance closes to 16·ln2·(G_m·A)².
pub const LN2: f64 = std::f64::consts::LN_2;

/// Square-wave demodulation filter for one integration window.
///
/// The equivalent noise bandwidth is evaluated numerically from the
/// discretized kernel (Parseval) and cached; for an ideal ±1 square wave
/// it equals 2/T for the peak-to-peak output convention.
#[derive(Debug, Clone, Copy)]
pub struct DemodFilter {
    pub t_int_ns: f64,
    pub f_mod_mhz: f64,
    /// One-sided equivalent noise bandwidth, Hz, peak-to-peak referred.
    pub enbw_hz: f64,
}

impl DemodFilter {
    pub fn new(t_int_ns: f64, f_mod_mhz: f64) -> Result<Self> {
        if t_int_ns <= 0.0 || !t_int_ns.is_finite() || f_mod_mhz <= 0.0 || !f_mod_mhz.is_finite() {
            return Err(SimError::invalid(
                "DemodFilter: integration time and modulation frequency must be > 0",
            ));
        }
        let t_s = t_int_ns * 1e-9;
        // Kernel h(t) = (2/T)·s(t) on [0, T]; ENBW = ½ ∫ h² dt.
        let n = 4096usize;
        let dt = t_s / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let t = (i as f64 + 0.5) * dt;
            let s = square_wave(t, f_mod_mhz * 1e6);
            let h = 2.0 / t_s * s;
            acc += h * h * dt;
        }
        Ok(DemodFilter {
            t_int_ns,
            f_mod_mhz,
            enbw_hz: 0.5 * acc,
        })
    }
}

/// ±1 square wave at frequency `f_hz`, starting high at t = 0.
pub fn square_wave(t_s: f64, f_hz: f64) -> f64 {
    let phase = (t_s * f_hz).fract();
    if phase < 0.5 {
        1.0
    } else {
        -1.0
    }
}

/// Filter integrals keyed by the bit patterns of (t_int, f_lo, kind).
type IntegralCache = Mutex<HashMap<(u64, u64, u8), f64>>;

fn cache() -> &'static IntegralCache {
    static CACHE: OnceLock<IntegralCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// ∫_{x_lo}^{∞} sinc²(πx)/x dx with x = f·T: the boxcar 1/f filter
/// integral in dimensionless form.
fn boxcar_integral_dimensionless(x_lo: f64) -> f64 {
    integrate_onef_kernel(x_lo, |x| {
        let s = sinc(std::f64::consts::PI * x);
        s * s
    })
}

/// ∫_{x_lo}^{∞} sinc²(πx)·4sin²(πx)/x dx: the boxcar-difference
/// (reference-subtracted) 1/f filter integral. Approaches 4·ln2 as
/// x_lo → 0.
fn difference_integral_dimensionless(x_lo: f64) -> f64 {
    integrate_onef_kernel(x_lo, |x| {
        let p = std::f64::consts::PI * x;
        let s = sinc(p);
        let sn = p.sin();
        s * s * 4.0 * sn * sn
    })
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Composite integration of kernel(x)/x over [x_lo, ∞): log-spaced
/// Simpson below x = 1, linear Simpson to x = 60, analytic envelope tail.
fn integrate_onef_kernel(x_lo: f64, kernel: impl Fn(f64) -> f64) -> f64 {
    assert!(x_lo > 0.0, "low-frequency cutoff must be positive");
    let mut total = 0.0;
    if x_lo < 1.0 {
        // y = ln x substitution: ∫ kernel(e^y) dy.
        let (a, b) = (x_lo.ln(), 0.0);
        let n = 4000;
        let h = (b - a) / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let y = a + i as f64 * h;
            let w = simpson_weight(i, n);
            acc += w * kernel(y.exp());
        }
        total += acc * h / 3.0;
    }
    let start = x_lo.max(1.0);
    let end = 60.0;
    if start < end {
        let n = 24_000;
        let h = (end - start) / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let x = start + i as f64 * h;
            let w = simpson_weight(i, n);
            acc += w * kernel(x) / x;
        }
        total += acc * h / 3.0;
    }
    // Tail: kernel ≤ envelope c/x² ⇒ ∫ ≈ mean(kernel·x²)/ (2·end²).
    // For both kernels the x-averaged value of kernel·(πx)² is bounded; use
    // the asymptotic means ⟨sin²⟩ = ½, ⟨4sin⁴·sin²...⟩ handled via samples.
    let mut tail_mean = 0.0;
    let m = 200;
    for i in 0..m {
        let x = end + (i as f64 + 0.5) * 0.005;
        tail_mean += kernel(x) * x * x;
    }
    tail_mean /= m as f64;
    total += tail_mean / (2.0 * end * end);
    total
}

fn simpson_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i == n {
        1.0
    } else if i % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

/// Boxcar 1/f filter integral for integration time `t_int_ns` and a
/// low-frequency cutoff `f_lo_hz`; dimensionless. Cached.
pub fn boxcar_onef_integral(t_int_ns: f64, f_lo_hz: f64) -> f64 {
    let key = (t_int_ns.to_bits(), f_lo_hz.to_bits(), 0u8);
    if let Some(v) = cache().lock().unwrap().get(&key) {
        return *v;
    }
    let x_lo = f_lo_hz * t_int_ns * 1e-9;
    let v = boxcar_integral_dimensionless(x_lo);
    cache().lock().unwrap().insert(key, v);
    v
}

/// Reference-subtracted 1/f filter integral; approaches 4·ln2 for
/// cutoffs well below 1/T. Cached.
pub fn difference_onef_integral(t_int_ns: f64, f_lo_hz: f64) -> f64 {
    let key = (t_int_ns.to_bits(), f_lo_hz.to_bits(), 1u8);
    if let Some(v) = cache().lock().unwrap().get(&key) {
        return *v;
    }
    let x_lo = f_lo_hz * t_int_ns * 1e-9;
    let v = difference_integral_dimensionless(x_lo);
    cache().lock().unwrap().insert(key, v);
    v
}

/// Synthesize a stationary time series with one-sided power spectral
/// density A²/f by drawing a Gaussian random spectrum and inverting the
/// FFT. `amplitude` is A in µV/√Hz at 1 Hz; output is in µV.
///
/// The ensemble-averaged periodogram matches A²/f between ~1/duration
/// and the Nyquist frequency.
pub fn synthesize_1f(
    amplitude_uv_sqrt_hz: f64,
    duration_s: f64,
    sample_rate_hz: f64,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    if duration_s <= 0.0
        || !duration_s.is_finite()
        || sample_rate_hz <= 0.0
        || !sample_rate_hz.is_finite()
    {
        return Err(SimError::invalid(
            "synthesize_1f: duration and sample rate must be > 0",
        ));
    }
    let n = (duration_s * sample_rate_hz).round() as usize;
    if n < 16 {
        return Err(SimError::invalid(format!(
            "synthesize_1f: need at least 16 samples, got {n}"
        )));
    }
    if amplitude_uv_sqrt_hz == 0.0 {
        // Consume no randomness: an exactly zero process.
        return Ok(vec![0.0; n]);
    }
    let df = sample_rate_hz / n as f64;
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
    let a2 = amplitude_uv_sqrt_hz * amplitude_uv_sqrt_hz;
    for k in 1..n / 2 {
        let f = k as f64 * df;
        let sigma = (a2 / f * n as f64 * sample_rate_hz / 4.0).sqrt();
        let re: f64 = normal.sample(rng);
        let im: f64 = normal.sample(rng);
        spectrum[k] = Complex64::new(re * sigma, im * sigma);
        spectrum[n - k] = spectrum[k].conj();
    }
    if n.is_multiple_of(2) {
        let f = (n / 2) as f64 * df;
        let sigma = (a2 / f * n as f64 * sample_rate_hz / 2.0).sqrt();
        let g: f64 = normal.sample(rng);
        spectrum[n / 2] = Complex64::new(g * sigma, 0.0);
    }
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(n);
    ifft.process(&mut spectrum);
    Ok(spectrum.iter().map(|c| c.re / n as f64).collect())
}

/// One-sided periodogram estimate: returns (frequencies, PSD) with PSD
/// normalized so that Σ PSD·Δf equals the series variance.
pub fn periodogram(series: &[f64], sample_rate_hz: f64) -> (Vec<f64>, Vec<f64>) {
    let n = series.len();
    let mut buf: Vec<Complex64> = series.iter().map(|x| Complex64::new(*x, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let df = sample_rate_hz / n as f64;
    let mut freqs = Vec::with_capacity(n / 2);
    let mut psd = Vec::with_capacity(n / 2);
    for (k, c) in buf.iter().enumerate().take(n / 2).skip(1) {
        freqs.push(k as f64 * df);
        psd.push(2.0 * c.norm_sqr() / (n as f64 * sample_rate_hz));
    }
    (freqs, psd)
}
