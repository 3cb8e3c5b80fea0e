//! Clamped uniform B-spline grids and basis evaluation.
//!
//! A grid covers `[lo, hi]` with `intervals` uniform pieces and degree
//! `degree` splines over a clamped knot vector (endpoints repeated
//! `degree + 1` times), giving `intervals + degree` basis functions.
//! Inside the range the basis forms a partition of unity; outside, each
//! function continues affinely with the slope it carries at the boundary,
//! so activations stay defined and differentiable for any input.

use serde::{Deserialize, Serialize};

use crate::error::{ArkanError, Result};

/// Uniform clamped B-spline grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct SplineGrid {
    lo: f64,
    hi: f64,
    intervals: usize,
    degree: usize,
    knots: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    lo: f64,
    hi: f64,
    intervals: usize,
    degree: usize,
}

impl From<SplineGrid> for GridRepr {
    fn from(g: SplineGrid) -> Self {
        GridRepr {
            lo: g.lo,
            hi: g.hi,
            intervals: g.intervals,
            degree: g.degree,
        }
    }
}

impl TryFrom<GridRepr> for SplineGrid {
    type Error = ArkanError;

    fn try_from(r: GridRepr) -> Result<Self> {
        SplineGrid::new(r.lo, r.hi, r.intervals, r.degree)
    }
}

impl SplineGrid {
    pub fn new(lo: f64, hi: f64, intervals: usize, degree: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(ArkanError::InvalidGrid(format!(
                "need finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        if intervals == 0 || degree == 0 {
            return Err(ArkanError::InvalidGrid(format!(
                "need at least 1 interval and degree 1, got {intervals} and {degree}"
            )));
        }
        let h = (hi - lo) / intervals as f64;
        let mut knots = Vec::with_capacity(intervals + 2 * degree + 1);
        for _ in 0..degree {
            knots.push(lo);
        }
        for i in 0..=intervals {
            knots.push(lo + h * i as f64);
        }
        for _ in 0..degree {
            knots.push(hi);
        }
        Ok(SplineGrid {
            lo,
            hi,
            intervals,
            degree,
            knots,
        })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of basis functions, `intervals + degree`.
    pub fn basis_count(&self) -> usize {
        self.intervals + self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// All basis values at `x`. See [`bspline_basis`].
    pub fn basis(&self, x: f64) -> Vec<f64> {
        self.basis_and_derivative(x).0
    }

    /// Basis values and their derivatives at `x`.
    ///
    /// Outside `[lo, hi]` both come from the affine continuation: the value
    /// extends linearly from the boundary and the derivative is the constant
    /// boundary slope.
    pub fn basis_and_derivative(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        if x < self.lo {
            let (v, d) = self.basis_and_derivative_inside(self.lo);
            return extrapolate(v, d, x - self.lo);
        }
        if x > self.hi {
            let (v, d) = self.basis_and_derivative_inside(self.hi);
            return extrapolate(v, d, x - self.hi);
        }
        self.basis_and_derivative_inside(x)
    }

    fn span(&self, x: f64) -> usize {
        let h = (self.hi - self.lo) / self.intervals as f64;
        let cell = (((x - self.lo) / h) as usize).min(self.intervals - 1);
        self.degree + cell
    }

    fn basis_and_derivative_inside(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        let k = self.degree;
        let s = self.span(x);
        let t = &self.knots;

        // Local nonzero values of the degree-k basis (de Boor's algorithm),
        // plus the degree-(k-1) values the derivative formula needs.
        let mut local = vec![0.0; k + 1];
        let mut lower = vec![0.0; k];
        local[0] = 1.0;
        let mut left = vec![0.0; k + 1];
        let mut right = vec![0.0; k + 1];
        for j in 1..=k {
            if j == k {
                lower[..k].copy_from_slice(&local[..k]);
            }
            left[j] = x - t[s + 1 - j];
            right[j] = t[s + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = local[r] / denom;
                local[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            local[j] = saved;
        }
        let n = self.basis_count();
        let mut values = vec![0.0; n];
        let mut derivs = vec![0.0; n];
        for (r, v) in local.iter().enumerate() {
            values[s - k + r] = *v;
        }
        // lower[r] holds the degree-(k-1) basis at global index s-k+1+r.
        let lower_at = |c: usize| -> f64 {
            if c + k >= s + 1 && c <= s {
                lower[c + k - s - 1]
            } else {
                0.0
            }
        };
        for c in s - k..=s {
            let mut acc = 0.0;
            let span_a = t[c + k] - t[c];
            if span_a > 0.0 {
                acc += lower_at(c) / span_a;
            }
            let span_b = t[c + k + 1] - t[c + 1];
            if span_b > 0.0 {
                acc -= lower_at(c + 1) / span_b;
            }
            derivs[c] = k as f64 * acc;
        }
        (values, derivs)
    }
}

fn extrapolate(values: Vec<f64>, derivs: Vec<f64>, offset: f64) -> (Vec<f64>, Vec<f64>) {
    let extended = values
        .iter()
        .zip(&derivs)
        .map(|(v, d)| v + d * offset)
        .collect();
    (extended, derivs)
}

/// All `intervals + degree` basis values at `x`, in knot order.
pub fn bspline_basis(grid: &SplineGrid, x: f64) -> Vec<f64> {
    grid.basis(x)
}
