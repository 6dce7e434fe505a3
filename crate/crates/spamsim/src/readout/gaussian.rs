//! Readout histograms and the two-Gaussian state discrimination fit.

use serde::Serialize;

use crate::error::{Result, SimError};

/// Binned single-shot currents. The raw shot list is retained so fits can
/// work at full resolution.
#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    /// Bin edges, strictly increasing, pA.
    pub edges_pa: Vec<f64>,
    /// Counts per bin; sums to the number of shots.
    pub counts: Vec<u64>,
    /// Retained shot list, pA.
    pub shots_pa: Vec<f64>,
}

impl Histogram {
    /// Bin `shots` into `n_bins` equal-width bins spanning the data range.
    pub fn from_shots(shots: &[f64], n_bins: usize) -> Result<Self> {
        if shots.is_empty() || n_bins == 0 {
            return Err(SimError::invalid("Histogram: empty shots or zero bins"));
        }
        let lo = shots.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = shots.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = (hi - lo).max(1e-12);
        let lo = lo - 1e-9 * span;
        let hi = hi + 1e-9 * span;
        let width = (hi - lo) / n_bins as f64;
        let edges: Vec<f64> = (0..=n_bins).map(|i| lo + i as f64 * width).collect();
        let mut counts = vec![0u64; n_bins];
        for &s in shots {
            let idx = (((s - lo) / width) as usize).min(n_bins - 1);
            counts[idx] += 1;
        }
        Ok(Histogram {
            edges_pa: edges,
            counts,
            shots_pa: shots.to_vec(),
        })
    }

    pub fn n_shots(&self) -> usize {
        self.shots_pa.len()
    }
}

/// Two-Gaussian fit of a readout histogram. The higher-current component
/// is labeled singlet: the ground singlet transfers to the doubly
/// occupied charge state, which this crate's sign convention places at
/// positive current shift.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GaussianPairFit {
    pub mu_singlet_pa: f64,
    pub mu_triplet_pa: f64,
    pub sigma_singlet_pa: f64,
    pub sigma_triplet_pa: f64,
    pub weight_singlet: f64,
    pub weight_triplet: f64,
    /// |µ_S − µ_T| / σ_pooled with σ_pooled² = (σ_S² + σ_T²)/2.
    pub snr: f64,
    /// Mean per-shot negative log-likelihood at convergence.
    pub nll: f64,
}

impl GaussianPairFit {
    pub fn sigma_pooled(&self) -> f64 {
        (0.5 * (self.sigma_singlet_pa.powi(2) + self.sigma_triplet_pa.powi(2))).sqrt()
    }
}

fn gauss_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// Maximum-likelihood two-Gaussian fit (EM), initialized by splitting the
/// shot list at its median.
pub fn fit_double_gaussian(hist: &Histogram) -> Result<GaussianPairFit> {
    let shots = &hist.shots_pa;
    let n = shots.len();
    if n < 200 {
        return Err(SimError::invalid(format!(
            "fit_double_gaussian: need at least 200 shots, got {n}"
        )));
    }

    // Median-valley initialization: split at the median and seed each
    // component from its half.
    let mut sorted = shots.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[n / 2];
    let (lo, hi): (Vec<f64>, Vec<f64>) = shots.iter().partition(|s| **s < median);
    let seed = |xs: &[f64]| -> (f64, f64) {
        let m = xs.iter().sum::<f64>() / xs.len().max(1) as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len().max(1) as f64;
        (m, v.sqrt().max(1e-9))
    };
    let (mut mu1, mut s1) = seed(&lo);
    let (mut mu2, mut s2) = seed(&hi);
    let (mut w1, mut w2) = (0.5, 0.5);

    let full_spread = (sorted[n - 1] - sorted[0]).max(1e-12);
    if (mu2 - mu1).abs() < 1e-9 * full_spread {
        return Err(SimError::DegenerateFit(
            "component means indistinguishable at initialization".into(),
        ));
    }

    let mut nll_prev = f64::INFINITY;
    let mut converged = false;
    let mut resp1 = vec![0.0; n];
    for _iter in 0..500 {
        // E step.
        let mut nll = 0.0;
        for (i, &x) in shots.iter().enumerate() {
            let p1 = w1 * gauss_pdf(x, mu1, s1);
            let p2 = w2 * gauss_pdf(x, mu2, s2);
            let tot = (p1 + p2).max(1e-300);
            resp1[i] = p1 / tot;
            nll -= tot.ln();
        }
        nll /= n as f64;
        // M step.
        let n1: f64 = resp1.iter().sum();
        let n2 = n as f64 - n1;
        if n1 < 1e-6 || n2 < 1e-6 {
            return Err(SimError::DegenerateFit(
                "one component collapsed to zero weight".into(),
            ));
        }
        mu1 = shots.iter().zip(&resp1).map(|(x, r)| x * r).sum::<f64>() / n1;
        mu2 = shots
            .iter()
            .zip(&resp1)
            .map(|(x, r)| x * (1.0 - r))
            .sum::<f64>()
            / n2;
        s1 = (shots
            .iter()
            .zip(&resp1)
            .map(|(x, r)| r * (x - mu1).powi(2))
            .sum::<f64>()
            / n1)
            .sqrt()
            .max(1e-9);
        s2 = (shots
            .iter()
            .zip(&resp1)
            .map(|(x, r)| (1.0 - r) * (x - mu2).powi(2))
            .sum::<f64>()
            / n2)
            .sqrt()
            .max(1e-9);
        w1 = n1 / n as f64;
        w2 = n2 / n as f64;

        if (nll_prev - nll).abs() < 1e-12 {
            converged = true;
            nll_prev = nll;
            break;
        }
        nll_prev = nll;
    }
    if !converged && !nll_prev.is_finite() {
        return Err(SimError::FitFailure(format!(
            "EM diverged: nll = {nll_prev}"
        )));
    }

    // EM on unimodal data converges to two heavily overlapping
    // components; below two pooled widths of separation the split is
    // not a state discrimination.
    let sigma_pooled = (0.5 * (s1 * s1 + s2 * s2)).sqrt();
    if (mu2 - mu1).abs() < 2.0 * sigma_pooled {
        return Err(SimError::DegenerateFit(format!(
            "separation {:.3} pA below twice the pooled width {:.3} pA",
            (mu2 - mu1).abs(),
            sigma_pooled
        )));
    }

    // Higher-current component is the singlet.
    let (mu_s, s_s, w_s, mu_t, s_t, w_t) = if mu1 > mu2 {
        (mu1, s1, w1, mu2, s2, w2)
    } else {
        (mu2, s2, w2, mu1, s1, w1)
    };
    Ok(GaussianPairFit {
        mu_singlet_pa: mu_s,
        mu_triplet_pa: mu_t,
        sigma_singlet_pa: s_s,
        sigma_triplet_pa: s_t,
        weight_singlet: w_s,
        weight_triplet: w_t,
        snr: (mu_s - mu_t).abs() / sigma_pooled,
        nll: nll_prev,
    })
}

/// Infidelity floor from finite signal-to-noise: for symmetric Gaussian
/// readout noise, thresholding cannot do better than
/// ½·(1 − erf(SNR/(2√2))).
pub fn snr_fidelity_bound(snr: f64) -> Result<f64> {
    if snr < 0.0 || !snr.is_finite() {
        return Err(SimError::invalid("snr_fidelity_bound: snr must be >= 0"));
    }
    Ok(0.5 * libm::erfc(snr / (2.0 * std::f64::consts::SQRT_2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use approx::assert_relative_eq;
    use rand_distr::{Distribution, Normal};

    fn synthetic_shots(mu_s: f64, mu_t: f64, sigma: f64, w_s: f64, n: usize) -> Vec<f64> {
        let mut rng = stream(99, "gauss-shots", 0);
        let gs = Normal::new(mu_s, sigma).unwrap();
        let gt = Normal::new(mu_t, sigma).unwrap();
        (0..n)
            .map(|i| {
                if (i as f64 + 0.5) / n as f64 <= w_s {
                    gs.sample(&mut rng)
                } else {
                    gt.sample(&mut rng)
                }
            })
            .collect()
    }

    #[test]
    fn recovers_snr_6p5() {
        // Δµ = 65 pA and σ = 10 pA: SNR 6.5.
        let shots = synthetic_shots(65.0, 0.0, 10.0, 0.5, 20_000);
        let hist = Histogram::from_shots(&shots, 120).unwrap();
        let fit = fit_double_gaussian(&hist).unwrap();
        assert!((fit.snr - 6.5).abs() < 0.2, "snr = {}", fit.snr);
        assert!((fit.weight_singlet - 0.5).abs() < 0.02);
        assert!(fit.mu_singlet_pa > fit.mu_triplet_pa);
    }

    #[test]
    fn recovers_snr_15p5() {
        let shots = synthetic_shots(155.0, 0.0, 10.0, 0.5, 20_000);
        let hist = Histogram::from_shots(&shots, 160).unwrap();
        let fit = fit_double_gaussian(&hist).unwrap();
        assert!((fit.snr - 15.5).abs() < 0.5, "snr = {}", fit.snr);
    }

    #[test]
    fn identical_means_are_degenerate() {
        let shots = synthetic_shots(10.0, 10.0, 5.0, 0.5, 5_000);
        let hist = Histogram::from_shots(&shots, 80).unwrap();
        match fit_double_gaussian(&hist) {
            Err(SimError::DegenerateFit(_)) => {}
            other => panic!("expected degenerate fit, got {other:?}"),
        }
    }

    #[test]
    fn too_few_shots_rejected() {
        let shots = synthetic_shots(65.0, 0.0, 10.0, 0.5, 100);
        let hist = Histogram::from_shots(&shots, 20).unwrap();
        assert!(matches!(
            fit_double_gaussian(&hist),
            Err(SimError::InvalidArgument(_))
        ));
    }

    #[test]
    fn histogram_counts_sum_to_shots() {
        let shots = synthetic_shots(65.0, 0.0, 10.0, 0.3, 3_333);
        let hist = Histogram::from_shots(&shots, 64).unwrap();
        assert_eq!(hist.counts.iter().sum::<u64>() as usize, shots.len());
        assert!(hist.edges_pa.windows(2).all(|w| w[1] > w[0]));
    }

    /// Independent erfc route: numerically integrate the Gaussian tail.
    fn erfc_oracle(x: f64) -> f64 {
        // erfc(x) = 2/√π ∫_x^∞ e^{−t²} dt, Simpson on [x, x+12].
        let n = 40_000;
        let h = 12.0 / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let t = x + i as f64 * h;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * (-t * t).exp();
        }
        acc * h / 3.0 * 2.0 / std::f64::consts::PI.sqrt()
    }

    #[test]
    fn snr_bound_values() {
        assert_relative_eq!(snr_fidelity_bound(0.0).unwrap(), 0.5, epsilon = 1e-15);
        // Exact value 5.7702e-4 (quadrature oracle below); quoted
        // figures truncate it to 5.7e-4 and round it to 6e-4.
        let b65 = snr_fidelity_bound(6.5).unwrap();
        assert_relative_eq!(b65, 5.77025e-4, max_relative = 1e-4);
        assert_relative_eq!(
            b65,
            0.5 * erfc_oracle(6.5 / (2.0 * std::f64::consts::SQRT_2)),
            max_relative = 1e-6
        );
        let b155 = snr_fidelity_bound(15.5).unwrap();
        assert!(b155 > 1e-15 && b155 < 1e-14, "got {b155}");
    }

    #[test]
    fn snr_bound_strictly_decreasing() {
        let mut prev = snr_fidelity_bound(0.0).unwrap();
        for i in 1..100 {
            let b = snr_fidelity_bound(i as f64 * 0.2).unwrap();
            assert!(b < prev);
            prev = b;
        }
    }
}
