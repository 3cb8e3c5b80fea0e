//! Small dense solvers used by the estimation paths. Partial-pivot LU for
//! square systems, Householder QR for least squares. Deterministic, no BLAS.

use ndarray::{Array1, Array2};

use crate::error::{ArkanError, Result};

/// Solves `a * x = b` with partial pivoting, consuming both arguments.
pub(crate) fn solve(mut a: Array2<f64>, mut b: Array1<f64>) -> Result<Array1<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(ArkanError::ShapeMismatch {
            expected: n,
            got: a.ncols().max(b.len()),
        });
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = f64::EPSILON * n as f64 * scale;
    let mut max_piv = 0.0f64;
    let mut min_piv = f64::INFINITY;

    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_val = a[[col, col]].abs();
        for row in col + 1..n {
            let v = a[[row, col]].abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = row;
            }
        }
        if pivot_val <= tol {
            return Err(ArkanError::Estimation {
                what: "dense solve",
                reason: "matrix is numerically singular",
                condition: if min_piv.is_finite() && min_piv > 0.0 {
                    max_piv / min_piv
                } else {
                    f64::INFINITY
                },
            });
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap([col, k], [pivot_row, k]);
            }
            b.swap(col, pivot_row);
        }
        max_piv = max_piv.max(pivot_val);
        min_piv = min_piv.min(pivot_val);

        let inv = 1.0 / a[[col, col]];
        for row in col + 1..n {
            let factor = a[[row, col]] * inv;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[[row, k]] -= factor * a[[col, k]];
            }
            b[row] -= factor * b[col];
        }
    }

    let mut x = Array1::zeros(n);
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[[row, k]] * x[k];
        }
        x[row] = acc / a[[row, row]];
    }
    Ok(x)
}

/// Minimum-residual solution of `x * beta = y` for a tall matrix, via
/// Householder QR. Errors with [`ArkanError::SingularRegression`] when the
/// triangular factor has a numerically zero diagonal.
pub(crate) fn lstsq(x: &Array2<f64>, y: &Array1<f64>) -> Result<Array1<f64>> {
    let m = x.nrows();
    let k = x.ncols();
    if y.len() != m {
        return Err(ArkanError::ShapeMismatch {
            expected: m,
            got: y.len(),
        });
    }
    if m < k || k == 0 {
        return Err(ArkanError::SingularRegression);
    }
    let mut r = x.clone();
    let mut q_t_y = y.clone();

    for col in 0..k {
        let mut norm2 = 0.0;
        for row in col..m {
            norm2 += r[[row, col]] * r[[row, col]];
        }
        let norm = norm2.sqrt();
        if norm == 0.0 {
            return Err(ArkanError::SingularRegression);
        }
        let alpha = if r[[col, col]] >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; m - col];
        v[0] = r[[col, col]] - alpha;
        for row in col + 1..m {
            v[row - col] = r[[row, col]];
        }
        let v_norm2: f64 = v.iter().map(|e| e * e).sum();
        if v_norm2 > 0.0 {
            for target in col..k {
                let mut dot = 0.0;
                for row in col..m {
                    dot += v[row - col] * r[[row, target]];
                }
                let f = 2.0 * dot / v_norm2;
                for row in col..m {
                    r[[row, target]] -= f * v[row - col];
                }
            }
            let mut dot = 0.0;
            for row in col..m {
                dot += v[row - col] * q_t_y[row];
            }
            let f = 2.0 * dot / v_norm2;
            for row in col..m {
                q_t_y[row] -= f * v[row - col];
            }
        }
        r[[col, col]] = alpha;
    }

    let r_max = (0..k).fold(0.0f64, |acc, i| acc.max(r[[i, i]].abs()));
    let tol = f64::EPSILON * m as f64 * r_max;
    let mut beta = Array1::zeros(k);
    for row in (0..k).rev() {
        if r[[row, row]].abs() <= tol {
            return Err(ArkanError::SingularRegression);
        }
        let mut acc = q_t_y[row];
        for col in row + 1..k {
            acc -= r[[row, col]] * beta[col];
        }
        beta[row] = acc / r[[row, row]];
    }
    Ok(beta)
}
