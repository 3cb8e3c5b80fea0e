//! Forecast metrics, period detection, and seasonal structure analysis.
//!
//! Period detection scans the autocorrelation of the standardized series for
//! its largest interior local maximum. The strength statistic decomposes the
//! series at the detected period and reports the fraction of energy in the
//! seasonal component; peaks that fail a white-noise significance band are
//! flagged weak and contribute no strength, since a decomposition at a
//! spurious period measures nothing.

use serde::{Deserialize, Serialize};

use crate::armemory;
use crate::error::{ArkanError, Result};
use crate::series::{fit_standardize, TimeSeries};

/// Mean squared error between two equal-length vectors.
pub fn mse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    if pred.len() != actual.len() {
        return Err(ArkanError::ShapeMismatch {
            expected: actual.len(),
            got: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(ArkanError::EmptySeries);
    }
    let sum: f64 = pred
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Additive decomposition of a series at a fixed period.
#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionResult {
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub residual: Vec<f64>,
    pub period: usize,
}

/// Outcome of the periodicity analysis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicityReport {
    /// Detected period in samples; 0 means no interior peak was found.
    pub period: usize,
    /// Seasonal energy fraction in [0, 1]; 0 for aperiodic or weak peaks.
    pub strength: f64,
    /// Autocorrelation at the detected period, normalized by lag zero.
    pub acf_peak_value: f64,
    /// True when the peak sits below the white-noise significance band.
    pub weak_peak: bool,
}

/// White-noise autocorrelation values carry a standard deviation near
/// `1/sqrt(n - lag)`; a peak must clear four of those to count, which keeps
/// the familywise false-positive rate around one percent when a few hundred
/// lags are scanned.
const PEAK_SIGNIFICANCE_Z: f64 = 4.0;

const MIN_ANALYSIS_LEN: usize = 8;

/// Returns the lag of the largest local maximum of the standardized series'
/// autocorrelation (scanned up to lag `n/2`), or 0 when none exists.
pub fn detect_period(ts: &TimeSeries) -> Result<usize> {
    let z = standardized_values(ts)?;
    Ok(scan_acf_peak(&z)?.0)
}

fn standardized_values(ts: &TimeSeries) -> Result<Vec<f64>> {
    if ts.len() < MIN_ANALYSIS_LEN {
        return Err(ArkanError::SeriesTooShort {
            len: ts.len(),
            min: MIN_ANALYSIS_LEN,
        });
    }
    let stats = fit_standardize(ts)?;
    Ok(ts
        .values()
        .iter()
        .map(|v| (v - stats.mean) / stats.std)
        .collect())
}

/// Largest interior local maximum of the autocorrelation: `(lag, r(lag)/r(0))`,
/// or `(0, 0.0)` when the autocorrelation has no interior local maximum.
/// Ties within a tiny tolerance keep the smallest lag, so exactly periodic
/// series report the fundamental period rather than a multiple.
fn scan_acf_peak(z: &[f64]) -> Result<(usize, f64)> {
    let maxlag = z.len() / 2;
    let acf = armemory::autocorrelation_slice(z, maxlag, crate::exec::Threading::Sequential)?;
    let r = acf.values();
    let tolerance = 1e-9 * r[0];
    let mut best_lag = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    for lag in 2..maxlag {
        if r[lag] > r[lag - 1] && r[lag] >= r[lag + 1] && r[lag] > best_val + tolerance {
            best_val = r[lag];
            best_lag = lag;
        }
    }
    if best_lag == 0 {
        Ok((0, 0.0))
    } else {
        Ok((best_lag, best_val / r[0]))
    }
}

/// Classical additive decomposition at the given period.
///
/// The trend is a centered moving average (even periods weight the two
/// window endpoints by one half) extended to the boundaries by its nearest
/// interior value. Seasonal values are per-phase means of the detrended
/// series over interior indices only, re-centered to zero mean and tiled.
/// The residual makes the reconstruction exact.
pub fn seasonal_decompose(ts: &TimeSeries, period: usize) -> Result<DecompositionResult> {
    let x = ts.values();
    let n = x.len();
    if period < 2 {
        return Err(ArkanError::InvalidConfig(
            "decomposition period must be at least 2".into(),
        ));
    }
    if n < 2 * period {
        return Err(ArkanError::SeriesTooShort {
            len: n,
            min: 2 * period,
        });
    }

    let h = period / 2;
    let first = h;
    let last = n - 1 - h;
    let mut trend = vec![0.0; n];
    if period % 2 == 0 {
        for (i, t) in trend.iter_mut().enumerate().take(last + 1).skip(first) {
            let mut acc = 0.5 * (x[i - h] + x[i + h]);
            for k in 1..h {
                acc += x[i - h + k] + x[i + h - k];
            }
            acc += x[i];
            *t = acc / period as f64;
        }
    } else {
        for (i, t) in trend.iter_mut().enumerate().take(last + 1).skip(first) {
            let acc: f64 = x[i - h..=i + h].iter().sum();
            *t = acc / period as f64;
        }
    }
    for i in 0..first {
        trend[i] = trend[first];
    }
    for i in last + 1..n {
        trend[i] = trend[last];
    }

    let mut phase_sums = vec![0.0; period];
    let mut phase_counts = vec![0usize; period];
    for i in first..=last {
        phase_sums[i % period] += x[i] - trend[i];
        phase_counts[i % period] += 1;
    }
    let mut pattern: Vec<f64> = phase_sums
        .iter()
        .zip(&phase_counts)
        .map(|(s, c)| s / *c as f64)
        .collect();
    let pattern_mean = pattern.iter().sum::<f64>() / period as f64;
    for p in &mut pattern {
        *p -= pattern_mean;
    }

    let seasonal: Vec<f64> = (0..n).map(|i| pattern[i % period]).collect();
    let residual: Vec<f64> = (0..n).map(|i| x[i] - trend[i] - seasonal[i]).collect();
    Ok(DecompositionResult {
        trend,
        seasonal,
        residual,
        period,
    })
}

/// Detects a period and reports the seasonal energy fraction of the
/// standardized series.
pub fn periodicity_strength(ts: &TimeSeries) -> Result<PeriodicityReport> {
    let z = standardized_values(ts)?;
    let (period, peak) = scan_acf_peak(&z)?;
    if period == 0 {
        return Ok(PeriodicityReport {
            period: 0,
            strength: 0.0,
            acf_peak_value: 0.0,
            weak_peak: false,
        });
    }
    let band = PEAK_SIGNIFICANCE_Z / ((z.len() - period) as f64).sqrt();
    if peak < band {
        return Ok(PeriodicityReport {
            period,
            strength: 0.0,
            acf_peak_value: peak,
            weak_peak: true,
        });
    }
    let zs = ts.with_values(z.clone());
    let decomposition = seasonal_decompose(&zs, period)?;
    let seasonal_energy: f64 = decomposition.seasonal.iter().map(|s| s * s).sum();
    let total_energy: f64 = z.iter().map(|v| v * v).sum();
    let strength = (seasonal_energy / total_energy).clamp(0.0, 1.0);
    Ok(PeriodicityReport {
        period,
        strength,
        acf_peak_value: peak,
        weak_peak: false,
    })
}
