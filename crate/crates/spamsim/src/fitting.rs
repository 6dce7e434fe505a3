//! Small weighted nonlinear least-squares (Levenberg-Marquardt) used by
//! the decay-time and benchmarking fits, plus linear helpers for
//! initialization.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SimError};

/// Outcome of a converged fit.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub params: Vec<f64>,
    /// Parameter covariance (JᵀWJ)⁻¹ scaled by reduced chi-square.
    pub covariance: DMatrix<f64>,
    /// Weighted sum of squared residuals at the optimum.
    pub chi2: f64,
    pub n_points: usize,
    pub iterations: usize,
}

impl FitOutcome {
    pub fn param_err(&self, i: usize) -> f64 {
        self.covariance[(i, i)].max(0.0).sqrt()
    }
}

/// Weighted Levenberg-Marquardt with a numerically differenced Jacobian.
///
/// `model(params, x)` evaluates the fit function; `weights` are 1/σ per
/// point. Parameters can be box-constrained with `bounds` (clamped each
/// step).
pub fn lm_fit<F>(
    xs: &[f64],
    ys: &[f64],
    weights: &[f64],
    p0: &[f64],
    bounds: Option<&[(f64, f64)]>,
    model: F,
) -> Result<FitOutcome>
where
    F: Fn(&[f64], f64) -> f64,
{
    let n = xs.len();
    let np = p0.len();
    if n != ys.len() || n != weights.len() {
        return Err(SimError::invalid("lm_fit: mismatched input lengths"));
    }
    if n < np {
        return Err(SimError::invalid(format!(
            "lm_fit: {n} points cannot constrain {np} parameters"
        )));
    }
    let clamp = |p: &mut [f64]| {
        if let Some(b) = bounds {
            for (v, (lo, hi)) in p.iter_mut().zip(b) {
                *v = v.clamp(*lo, *hi);
            }
        }
    };

    let residuals = |p: &[f64]| -> DVector<f64> {
        DVector::from_iterator(
            n,
            xs.iter()
                .zip(ys)
                .zip(weights)
                .map(|((x, y), w)| (y - model(p, *x)) * w),
        )
    };
    let chi2_of = |r: &DVector<f64>| r.dot(r);

    let mut p = p0.to_vec();
    clamp(&mut p);
    let mut r = residuals(&p);
    let mut chi2 = chi2_of(&r);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut jac = DMatrix::<f64>::zeros(n, np);

    for iter in 0..400 {
        iterations = iter + 1;
        // Central-difference Jacobian of the residual vector.
        for j in 0..np {
            let h = 1e-7 * p[j].abs().max(1e-9);
            let mut pp = p.clone();
            pp[j] += h;
            let rp = residuals(&pp);
            pp[j] = p[j] - h;
            let rm = residuals(&pp);
            for i in 0..n {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;

        let mut improved = false;
        for _ in 0..24 {
            let mut damped = jtj.clone();
            for j in 0..np {
                damped[(j, j)] += lambda * jtj[(j, j)].max(1e-12);
            }
            let Some(step) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, s)| a - s).collect();
            clamp(&mut trial);
            let rt = residuals(&trial);
            let c2 = chi2_of(&rt);
            if c2.is_finite() && c2 < chi2 {
                let rel = (chi2 - c2) / chi2.max(1e-300);
                p = trial;
                r = rt;
                chi2 = c2;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if rel < 1e-12 {
                    // Converged to machine-level improvement.
                    return finish(xs, &p, np, n, chi2, iterations, jac);
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
        if !improved {
            if chi2.is_finite() {
                return finish(xs, &p, np, n, chi2, iterations, jac);
            }
            return Err(SimError::FitFailure(format!(
                "LM stalled after {iterations} iterations, chi2 = {chi2:.6e}"
            )));
        }
    }
    finish(xs, &p, np, n, chi2, iterations, jac)
}

fn finish(
    _xs: &[f64],
    p: &[f64],
    np: usize,
    n: usize,
    chi2: f64,
    iterations: usize,
    jac: DMatrix<f64>,
) -> Result<FitOutcome> {
    let jtj = jac.transpose() * &jac;
    let dof = (n.saturating_sub(np)).max(1) as f64;
    let scale = (chi2 / dof).max(1e-300);
    let covariance = match jtj.clone().try_inverse() {
        Some(inv) => inv * scale,
        None => DMatrix::from_element(np, np, f64::NAN),
    };
    Ok(FitOutcome {
        params: p.to_vec(),
        covariance,
        chi2,
        n_points: n,
        iterations,
    })
}

/// Weighted linear regression y = a + b·x; returns (a, b).
pub fn weighted_linear_fit(xs: &[f64], ys: &[f64], weights: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() != weights.len() || xs.len() < 2 {
        return Err(SimError::invalid("weighted_linear_fit: bad inputs"));
    }
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((x, y), w) in xs.iter().zip(ys).zip(weights) {
        let w = w * w;
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let det = sw * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return Err(SimError::FitFailure("degenerate linear system".into()));
    }
    let b = (sw * sxy - sx * sy) / det;
    let a = (sy - b * sx) / sw;
    Ok((a, b))
}
