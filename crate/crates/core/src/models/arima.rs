//! ARIMA baseline estimated with the Hannan-Rissanen two-stage procedure.
//!
//! Stage one fits a long autoregression by Yule-Walker and keeps its
//! residuals as innovation estimates. Stage two regresses each sample on
//! `p` lags of the series and `q` lags of those residuals by least squares.
//! Moving-average estimates that land outside the invertible region are
//! replaced by the invertible representation of the same autocovariance
//! (reciprocal roots), since the forecasting recursion diverges with history
//! length under a non-invertible polynomial. Estimates that stay degenerate
//! after that are rejected. The differencing degree and moving-average order
//! are picked by one-step validation error on the tail of the training data,
//! then the winner is refit on everything.

use serde::{Deserialize, Serialize};

use crate::armemory::{autocorrelation_slice, solve_yule_walker};
use crate::error::{ArkanError, Result};
use crate::exec::Threading;
use crate::linalg::lstsq;
use crate::series::difference_slice;
use ndarray::{Array1, Array2};

const D_CANDIDATES: [usize; 2] = [0, 1];
const Q_CANDIDATES: [usize; 2] = [1, 2];
const LONG_AR_CAP: usize = 40;

/// Fitted ARIMA(p, d, q) coefficients.
///
/// `phi` weights the `p` most recent differenced samples (index 0 is lag
/// one) and `theta` the `q` most recent innovation estimates. The stored
/// residuals are the tail of the training recursion, kept for inspection;
/// forecasting recomputes the recursion from whatever history it is given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArimaModel {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub residual_history: Vec<f64>,
}

impl ArimaModel {
    /// Hannan-Rissanen fit at fixed orders on an already-standardized
    /// series. Coefficients are only identified when `p` and `q` do not
    /// exceed the true orders; past that the design grows collinear and
    /// weight drifts between equivalent lags. Moving-average estimates are
    /// reported in invertible form; for `q` above two a non-invertible
    /// estimate is an error instead.
    pub fn fit(z: &[f64], p: usize, d: usize, q: usize) -> Result<ArimaModel> {
        fit_with_orders(z, p, d, q)
    }

    /// One-step forecast from a history of standardized samples, running
    /// the innovation recursion over the given slice.
    pub fn predict_next(&self, history: &[f64]) -> Result<f64> {
        one_step(self, history)
    }
}

/// Fits on a standardized training series, selecting `d` in {0, 1} and `q`
/// in {1, 2} by one-step error over the most recent fifth of the samples,
/// then refitting the winning orders on the full series. Candidates whose
/// estimation fails (a singular stage-two design, say) drop out of the
/// selection rather than failing the fit. The refit must also reproduce its
/// candidate's score on the selection slice to within a factor of two;
/// refitting on the longer series occasionally drifts a moving-average root
/// onto the unit circle, where the innovation recursion amplifies any
/// systematic prediction bias, and such a refit loses to the next orders.
pub(crate) fn fit(z: &[f64], p: usize) -> Result<ArimaModel> {
    if p == 0 {
        return Err(ArkanError::InvalidConfig("order p must be positive".into()));
    }
    let n = z.len();
    let n_sel = (((n as f64) * 0.2 + 1e-9).floor() as usize).max(1);
    let n_fit = n.checked_sub(n_sel).filter(|f| *f > 0).ok_or(
        ArkanError::SeriesTooShort { len: n, min: 2 },
    )?;

    let selection_mse = |model: &ArimaModel| -> Option<f64> {
        let mut sum = 0.0;
        for k in n_fit..n {
            let err = one_step(model, &z[..k]).ok()? - z[k];
            sum += err * err;
        }
        Some(sum / n_sel as f64)
    };

    let mut scored: Vec<(f64, usize, usize)> = Vec::new();
    for d in D_CANDIDATES {
        for q in Q_CANDIDATES {
            let Ok(candidate) = fit_with_orders(&z[..n_fit], p, d, q) else {
                continue;
            };
            if let Some(mse) = selection_mse(&candidate) {
                scored.push((mse, d, q));
            }
        }
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    for (candidate_mse, d, q) in scored {
        let Ok(refit) = fit_with_orders(z, p, d, q) else {
            continue;
        };
        match selection_mse(&refit) {
            Some(mse) if mse <= 2.0 * candidate_mse + 1e-12 => return Ok(refit),
            _ => {}
        }
    }
    Err(ArkanError::Estimation {
        what: "arima order selection",
        reason: "every (d, q) candidate failed to estimate",
        condition: 0.0,
    })
}

/// Hannan-Rissanen fit at fixed orders. `q = 0` reduces the stage-two
/// regression to a pure least-squares autoregression.
pub(crate) fn fit_with_orders(z: &[f64], p: usize, d: usize, q: usize) -> Result<ArimaModel> {
    if d > 1 {
        return Err(ArkanError::InvalidConfig(format!(
            "differencing degree must be 0 or 1, got {d}"
        )));
    }
    let w_diff;
    let w: &[f64] = if d == 1 {
        if z.len() < 2 {
            return Err(ArkanError::SeriesTooShort { len: z.len(), min: 2 });
        }
        w_diff = difference_slice(z);
        &w_diff
    } else {
        z
    };
    let (phi, theta) = estimate(w, p, q)?;
    let theta = to_invertible(theta);
    if !ma_invertible(&theta) {
        return Err(ArkanError::Estimation {
            what: "moving-average estimation",
            reason: "coefficients fall outside the invertible region",
            condition: theta.iter().fold(0.0, |m: f64, t| m.max(t.abs())),
        });
    }
    let residuals = innovation_recursion(&phi, &theta, p, q, w);
    let keep = q.max(1).min(residuals.len());
    let residual_history = residuals[residuals.len() - keep..].to_vec();
    Ok(ArimaModel {
        p,
        d,
        q,
        phi,
        theta,
        residual_history,
    })
}

fn estimate(w: &[f64], p: usize, q: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let nw = w.len();
    let long_order = (nw / 4).min(LONG_AR_CAP).max(1);
    let min_len = p.max(long_order + q) + p + q + 1;
    if nw < min_len + 1 {
        return Err(ArkanError::SeriesTooShort {
            len: nw,
            min: min_len + 1,
        });
    }
    let acf = autocorrelation_slice(w, long_order, Threading::Sequential)?;
    let long_coeffs = solve_yule_walker(&acf, long_order)?;

    let mut innovations = vec![0.0; nw];
    for n in long_order..nw {
        let mut pred = 0.0;
        for (i, a) in long_coeffs.iter().enumerate() {
            pred += a * w[n - 1 - i];
        }
        innovations[n] = w[n] - pred;
    }

    let start = p.max(long_order + q);
    let rows = nw - start;
    let cols = p + q;
    let mut x = Array2::zeros((rows, cols));
    let mut y = Array1::zeros(rows);
    for (row, n) in (start..nw).enumerate() {
        for i in 0..p {
            x[[row, i]] = w[n - 1 - i];
        }
        for j in 0..q {
            x[[row, p + j]] = innovations[n - 1 - j];
        }
        y[row] = w[n];
    }
    let beta = lstsq(&x, &y)?;
    let phi = beta.as_slice().expect("contiguous")[..p].to_vec();
    let theta = beta.as_slice().expect("contiguous")[p..].to_vec();
    Ok((phi, theta))
}

/// Maps a moving-average estimate onto the invertible representation of the
/// same autocovariance by replacing any root of the reciprocal polynomial
/// z^q + t1·z^{q-1} + ... + tq that lies outside the unit circle with its
/// reciprocal. Coefficients that need no flip are returned bitwise
/// unchanged. Orders above two are left to the invertibility guard.
fn to_invertible(theta: Vec<f64>) -> Vec<f64> {
    match *theta.as_slice() {
        [t1] if t1.abs() > 1.0 => vec![1.0 / t1],
        [t1, t2] => {
            let disc = t1 * t1 - 4.0 * t2;
            if disc < 0.0 {
                // Conjugate pair with squared modulus t2; flipping the pair
                // divides both coefficients by the product of the roots.
                if t2 > 1.0 {
                    vec![t1 / t2, 1.0 / t2]
                } else {
                    theta
                }
            } else {
                let s = disc.sqrt();
                let u1 = if t1 >= 0.0 { (-t1 - s) / 2.0 } else { (-t1 + s) / 2.0 };
                let u2 = if u1 == 0.0 { 0.0 } else { t2 / u1 };
                let (f1, f2) = (u1.abs() > 1.0, u2.abs() > 1.0);
                if !(f1 || f2) {
                    return theta;
                }
                let v1 = if f1 { 1.0 / u1 } else { u1 };
                let v2 = if f2 { 1.0 / u2 } else { u2 };
                vec![-(v1 + v2), v1 * v2]
            }
        }
        _ => theta,
    }
}

/// Schur-Cohn test that 1 + t1·z + ... + tq·z^q has every root strictly
/// outside the unit circle. Each step reads off the trailing coefficient
/// and deflates: with kappa = c_m, the next polynomial's coefficients are
/// (c_j - kappa·c_{m-j}) / (1 - kappa^2). All |kappa| < 1 iff invertible.
fn ma_invertible(theta: &[f64]) -> bool {
    let mut c = theta.to_vec();
    while let Some(&kappa) = c.last() {
        if !kappa.is_finite() || kappa.abs() >= 1.0 {
            return false;
        }
        let m = c.len() - 1;
        let scale = 1.0 - kappa * kappa;
        c = (0..m).map(|j| (c[j] - kappa * c[m - 1 - j]) / scale).collect();
    }
    true
}

/// Innovation estimates under the fitted coefficients: zero before index
/// `p`, then the one-step prediction error, teacher-forced on `w`.
fn innovation_recursion(phi: &[f64], theta: &[f64], p: usize, q: usize, w: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; w.len()];
    for n in p..w.len() {
        let mut pred = 0.0;
        for (i, c) in phi.iter().enumerate() {
            pred += c * w[n - 1 - i];
        }
        for (j, c) in theta.iter().enumerate().take(q) {
            if n >= 1 + j {
                pred += c * e[n - 1 - j];
            }
        }
        e[n] = w[n] - pred;
    }
    e
}

/// One-step forecast in standardized units, teacher-forced on the full
/// history: the innovation recursion is recomputed from the start of `z`,
/// so the result is a pure function of the model and the history.
pub(crate) fn one_step(model: &ArimaModel, z: &[f64]) -> Result<f64> {
    let needed = model.p + model.d;
    if z.len() < needed {
        return Err(ArkanError::SeriesTooShort {
            len: z.len(),
            min: needed,
        });
    }
    let w_diff;
    let w: &[f64] = if model.d == 1 {
        w_diff = difference_slice(z);
        &w_diff
    } else {
        z
    };
    let e = innovation_recursion(&model.phi, &model.theta, model.p, model.q, w);
    let nw = w.len();
    let mut pred = 0.0;
    for (i, c) in model.phi.iter().enumerate() {
        pred += c * w[nw - 1 - i];
    }
    for (j, c) in model.theta.iter().enumerate() {
        if nw >= 1 + j {
            pred += c * e[nw - 1 - j];
        }
    }
    Ok(if model.d == 1 {
        z[z.len() - 1] + pred
    } else {
        pred
    })
}
