//! Autocorrelation estimation, Yule-Walker solvers, and the frozen
//! autoregressive memory used as a fixed per-lag filter bank.
//!
//! The estimator keeps raw lagged products without mean subtraction, so
//! callers must pass standardized (near zero mean) series. Each lag is
//! normalized by its own overlap count `N - i`, which is faithful to how
//! the memory weights are derived but can lose positive definiteness at
//! extreme lags; the solver compensates with a jittered dense fallback.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{ArkanError, Result};
use crate::exec::{self, Threading};
use crate::series::TimeSeries;

/// Autocorrelation values `r(0) ..= r(maxlag)` of a standardized series.
#[derive(Clone, Debug, PartialEq)]
pub struct AutocorrSequence {
    r: Vec<f64>,
}

impl AutocorrSequence {
    /// Wraps raw autocorrelation values. `r[0]` must be positive and every
    /// entry finite; a non-positive `r[0]` means the series had no energy.
    pub fn new(r: Vec<f64>) -> Result<Self> {
        if r.is_empty() {
            return Err(ArkanError::EmptySeries);
        }
        if let Some(index) = r.iter().position(|v| !v.is_finite()) {
            return Err(ArkanError::NonFinite { index });
        }
        if r[0] <= 0.0 {
            return Err(ArkanError::DegenerateSeries);
        }
        Ok(AutocorrSequence { r })
    }

    pub fn values(&self) -> &[f64] {
        &self.r
    }

    pub fn maxlag(&self) -> usize {
        self.r.len() - 1
    }

    /// Symmetric Toeplitz matrix `R[i][j] = r(|i - j|)` of size `p`.
    pub fn toeplitz(&self, p: usize) -> Result<Array2<f64>> {
        if p == 0 || p > self.r.len() {
            return Err(ArkanError::ShapeMismatch {
                expected: self.r.len(),
                got: p,
            });
        }
        Ok(Array2::from_shape_fn((p, p), |(i, j)| {
            self.r[i.abs_diff(j)]
        }))
    }

    /// Right-hand side `[r(1), ..., r(p)]` of the Yule-Walker system.
    pub fn rho(&self, p: usize) -> Result<Array1<f64>> {
        if p == 0 || p > self.maxlag() {
            return Err(ArkanError::LagTooLarge {
                maxlag: self.maxlag(),
                len: p,
            });
        }
        Ok(Array1::from_iter(self.r[1..=p].iter().copied()))
    }
}

/// Lag autocorrelations of a standardized series:
/// `r(i) = (1 / (N - i)) * sum over n in [i, N) of x(n) * x(n - i)`.
///
/// Requires `maxlag < N` with at least two products at the deepest lag.
pub fn autocorrelation(ts: &TimeSeries, maxlag: usize) -> Result<AutocorrSequence> {
    autocorrelation_threaded(ts, maxlag, Threading::default())
}

/// [`autocorrelation`] with an explicit execution strategy. Lags are
/// independent, so both strategies give bit-identical results.
pub fn autocorrelation_threaded(
    ts: &TimeSeries,
    maxlag: usize,
    threading: Threading,
) -> Result<AutocorrSequence> {
    autocorrelation_slice(ts.values(), maxlag, threading)
}

pub(crate) fn autocorrelation_slice(
    x: &[f64],
    maxlag: usize,
    threading: Threading,
) -> Result<AutocorrSequence> {
    let n = x.len();
    if maxlag >= n || n - maxlag < 2 {
        return Err(ArkanError::LagTooLarge { maxlag, len: n });
    }
    let r = exec::map_indexed(threading, maxlag + 1, |i| {
        let mut acc = 0.0;
        for j in i..n {
            acc += x[j] * x[j - i];
        }
        acc / (n - i) as f64
    });
    AutocorrSequence::new(r)
}

/// Solves the order-`p` Yule-Walker system by the Levinson-Durbin
/// recursion alone, with no fallback.
///
/// Errors when the recursion's prediction error collapses below
/// `1e-12 * r(0)`, the sign that the Toeplitz matrix is not safely
/// positive definite at this order.
pub fn levinson_durbin(r: &AutocorrSequence, p: usize) -> Result<Vec<f64>> {
    if p == 0 || p > r.maxlag() {
        return Err(ArkanError::LagTooLarge {
            maxlag: r.maxlag(),
            len: p,
        });
    }
    let rv = r.values();
    let r0 = rv[0];
    let floor = 1e-12 * r0;
    let mut a: Vec<f64> = Vec::with_capacity(p);
    let mut e = r0;
    for m in 1..=p {
        if e <= floor {
            return Err(ArkanError::Estimation {
                what: "levinson-durbin",
                reason: "prediction error collapsed",
                condition: r0 / e.max(f64::MIN_POSITIVE),
            });
        }
        let mut acc = rv[m];
        for j in 1..m {
            acc -= a[j - 1] * rv[m - j];
        }
        let k = acc / e;
        let prev = a.clone();
        for j in 1..m {
            a[j - 1] = prev[j - 1] - k * prev[m - j - 1];
        }
        a.push(k);
        e *= 1.0 - k * k;
    }
    Ok(a)
}

/// Dense direct solve of the same system, with a Tikhonov jitter of
/// `1e-10 * r(0)` on the diagonal so borderline matrices stay solvable.
pub fn solve_dense(r: &AutocorrSequence, p: usize) -> Result<Vec<f64>> {
    if p == 0 || p > r.maxlag() {
        return Err(ArkanError::LagTooLarge {
            maxlag: r.maxlag(),
            len: p,
        });
    }
    let jitter = 1e-10 * r.values()[0];
    let mut matrix = r.toeplitz(p)?;
    for i in 0..p {
        matrix[[i, i]] += jitter;
    }
    let solution = crate::linalg::solve(matrix, r.rho(p)?)?;
    Ok(solution.to_vec())
}

/// Yule-Walker coefficients `a = R^-1 * rho`.
///
/// Runs Levinson-Durbin first and falls back to [`solve_dense`] when the
/// recursion degenerates or leaves a residual above `1e-8 * r(0)`. The
/// returned coefficients always satisfy that residual bound.
pub fn solve_yule_walker(r: &AutocorrSequence, p: usize) -> Result<Vec<f64>> {
    let bound = 1e-8 * r.values()[0];
    if let Ok(a) = levinson_durbin(r, p) {
        if yule_walker_residual(r, &a)? <= bound {
            return Ok(a);
        }
        log::debug!("levinson-durbin residual above bound, using dense fallback");
    }
    let a = solve_dense(r, p)?;
    let residual = yule_walker_residual(r, &a)?;
    if residual > bound {
        let blowup = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        return Err(ArkanError::Estimation {
            what: "yule-walker",
            reason: "fallback residual above tolerance",
            condition: blowup,
        });
    }
    Ok(a)
}

/// Max-norm residual of the unjittered system, `max_i |(R a - rho)_i|`.
pub fn yule_walker_residual(r: &AutocorrSequence, a: &[f64]) -> Result<f64> {
    let p = a.len();
    let matrix = r.toeplitz(p)?;
    let rho = r.rho(p)?;
    let mut worst = 0.0f64;
    for i in 0..p {
        let mut acc = -rho[i];
        for j in 0..p {
            acc += matrix[[i, j]] * a[j];
        }
        worst = worst.max(acc.abs());
    }
    Ok(worst)
}

/// Frozen autoregressive model: one-step predictor weights over the `p`
/// most recent samples, plus the differencing degree applied before
/// estimation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    pub p: usize,
    pub coeffs: Vec<f64>,
    pub d: usize,
}

/// Fits an order-`p` model on a standardized training series.
///
/// With `d = 1` the series is first-differenced before estimation; a
/// differenced series that comes out constant (a pure ramp) is rejected
/// the same way standardization rejects constants. Scale never affects
/// the solution, only a shifted mean would, so the differenced values are
/// checked but otherwise used as they are.
pub fn fit_ar(train: &TimeSeries, p: usize, d: usize) -> Result<ArModel> {
    if d > 1 {
        return Err(ArkanError::InvalidConfig(format!(
            "differencing degree must be 0 or 1, got {d}"
        )));
    }
    if p == 0 {
        return Err(ArkanError::InvalidConfig("order p must be positive".into()));
    }
    let len = train.len();
    if len < d || len - d <= p + 1 {
        return Err(ArkanError::SeriesTooShort {
            len,
            min: p + 2 + d,
        });
    }
    let work: Vec<f64>;
    let values = if d == 1 {
        work = crate::series::difference_slice(train.values());
        crate::series::fit_standardize_slice(&work)?;
        &work[..]
    } else {
        train.values()
    };
    let r = autocorrelation_slice(values, p, Threading::default())?;
    let coeffs = solve_yule_walker(&r, p)?;
    Ok(ArModel { p, coeffs, d })
}

/// One-step prediction `sum_i a[i] * window[i]` where `window[0]` is the
/// most recent sample.
pub fn ar_predict(model: &ArModel, window: &[f64]) -> Result<f64> {
    if window.len() != model.p {
        return Err(ArkanError::ShapeMismatch {
            expected: model.p,
            got: window.len(),
        });
    }
    Ok(model
        .coeffs
        .iter()
        .zip(window)
        .map(|(a, x)| a * x)
        .sum())
}

/// The memory filter bank: element-wise product `a[i] * window[i]`.
///
/// Summing the output reproduces [`ar_predict`] exactly; keeping the terms
/// separate is what feeds the downstream network one channel per lag.
pub fn apply_memory(model: &ArModel, window: &[f64]) -> Result<Vec<f64>> {
    if window.len() != model.p {
        return Err(ArkanError::ShapeMismatch {
            expected: model.p,
            got: window.len(),
        });
    }
    Ok(model
        .coeffs
        .iter()
        .zip(window)
        .map(|(a, x)| a * x)
        .collect())
}

/// The quadratic memory objective `L(w) = w'rho - 0.5 * w'Rw`, maximized
/// exactly by the Yule-Walker solution.
pub fn memory_objective(weights: &[f64], r_matrix: &Array2<f64>, rho: &[f64]) -> Result<f64> {
    let p = weights.len();
    if r_matrix.nrows() != p || r_matrix.ncols() != p || rho.len() != p {
        return Err(ArkanError::ShapeMismatch {
            expected: p,
            got: r_matrix.nrows().max(rho.len()),
        });
    }
    let linear: f64 = weights.iter().zip(rho).map(|(w, r)| w * r).sum();
    let mut quad = 0.0;
    for i in 0..p {
        for j in 0..p {
            quad += weights[i] * r_matrix[[i, j]] * weights[j];
        }
    }
    Ok(linear - 0.5 * quad)
}
