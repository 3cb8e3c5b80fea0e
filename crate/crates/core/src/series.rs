//! Series container, CSV IO, standardization, chronological splits, and
//! window extraction.
//!
//! Everything downstream assumes a validated [`TimeSeries`]: finite values,
//! at least one sample, and an optional uniform time axis. Standardization
//! is always fit on training data only and applied elsewhere, so the stats
//! travel alongside fitted models rather than being recomputed.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{ArkanError, Result};

/// A univariate series with an optional uniform time axis.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    t0: Option<f64>,
    dt: Option<f64>,
    name: String,
}

impl TimeSeries {
    /// Builds a series without a time axis. Rejects empty input and any
    /// non-finite value.
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(ArkanError::EmptySeries);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(ArkanError::NonFinite { index });
        }
        Ok(TimeSeries {
            values,
            t0: None,
            dt: None,
            name: name.into(),
        })
    }

    /// Builds a series with a uniform time axis starting at `t0` and spaced
    /// by `dt` (which must be positive and finite).
    pub fn with_time(name: impl Into<String>, values: Vec<f64>, t0: f64, dt: f64) -> Result<Self> {
        if !(t0.is_finite() && dt.is_finite() && dt > 0.0) {
            return Err(ArkanError::InvalidConfig(format!(
                "time axis needs finite t0 and positive dt, got t0={t0} dt={dt}"
            )));
        }
        let mut ts = Self::new(name, values)?;
        ts.t0 = Some(t0);
        ts.dt = Some(dt);
        Ok(ts)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false: empty series cannot be constructed.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn t0(&self) -> Option<f64> {
        self.t0
    }

    pub fn dt(&self) -> Option<f64> {
        self.dt
    }

    /// Time stamp of sample `i`, falling back to the index itself when the
    /// series has no time axis.
    pub fn time_at(&self, i: usize) -> f64 {
        match (self.t0, self.dt) {
            (Some(t0), Some(dt)) => t0 + dt * i as f64,
            _ => i as f64,
        }
    }

    /// Reads a two-column `t,value` CSV with a header row.
    ///
    /// The time column must be uniformly spaced to within a relative
    /// tolerance of 1e-9; the series name is taken from the file stem.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;

        let mut times = Vec::new();
        let mut values = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| csv_error(path, e))?;
            if record.len() != 2 {
                return Err(ArkanError::Malformed {
                    path: path.to_path_buf(),
                    line,
                    reason: format!("expected 2 columns, got {}", record.len()),
                });
            }
            let parse = |field: &str, what: &str| -> Result<f64> {
                field.trim().parse::<f64>().map_err(|_| ArkanError::Malformed {
                    path: path.to_path_buf(),
                    line,
                    reason: format!("{what} {field:?} is not a number"),
                })
            };
            times.push(parse(&record[0], "time")?);
            values.push(parse(&record[1], "value")?);
        }
        if values.len() < 2 {
            return Err(ArkanError::SeriesTooShort {
                len: values.len(),
                min: 2,
            });
        }

        let dt = times[1] - times[0];
        if !(dt.is_finite() && dt > 0.0) {
            return Err(ArkanError::Malformed {
                path: path.to_path_buf(),
                line: 3,
                reason: format!("time axis must increase, first step is {dt}"),
            });
        }
        let tol = 1e-9 * dt.abs().max(1.0);
        for i in 1..times.len() {
            let step = times[i] - times[i - 1];
            if (step - dt).abs() > tol {
                return Err(ArkanError::Malformed {
                    path: path.to_path_buf(),
                    line: i + 2,
                    reason: format!("non-uniform spacing: step {step} vs {dt}"),
                });
            }
        }

        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "series".to_string());
        Self::with_time(name, values, times[0], dt)
    }

    /// Writes the series as a `t,value` CSV with full f64 round-trip
    /// precision, so identical series produce identical bytes.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        writer
            .write_record(["t", "value"])
            .map_err(|e| csv_error(path, e))?;
        for (i, v) in self.values.iter().enumerate() {
            writer
                .write_record([self.time_at(i).to_string(), v.to_string()])
                .map_err(|e| csv_error(path, e))?;
        }
        writer.flush().map_err(|e| ArkanError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Ok(())
    }

    /// Same series with new values, keeping name and time metadata.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> TimeSeries {
        TimeSeries {
            values,
            t0: self.t0,
            dt: self.dt,
            name: self.name.clone(),
        }
    }
}

fn csv_error(path: &Path, e: csv::Error) -> ArkanError {
    match e.kind() {
        csv::ErrorKind::Io(_) => {
            if let csv::ErrorKind::Io(io) = e.into_kind() {
                ArkanError::Io {
                    path: path.to_path_buf(),
                    source: io,
                }
            } else {
                unreachable!()
            }
        }
        _ => ArkanError::Malformed {
            path: path.to_path_buf(),
            line: e
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or_default(),
            reason: e.to_string(),
        },
    }
}

/// Mean and population standard deviation of a training split.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub mean: f64,
    pub std: f64,
}

/// Estimates standardization stats from a series.
///
/// The standard deviation uses the population convention (divide by N).
/// A constant series has zero deviation and is rejected, since it carries
/// no signal to forecast.
///
/// ```
/// # use arkan_core::series::{fit_standardize, TimeSeries};
/// let ts = TimeSeries::new("demo", vec![2.0, 4.0, 6.0, 8.0]).unwrap();
/// let stats = fit_standardize(&ts).unwrap();
/// assert_eq!(stats.mean, 5.0);
/// assert!((stats.std - 5.0f64.sqrt()).abs() < 1e-12);
/// ```
pub fn fit_standardize(ts: &TimeSeries) -> Result<StandardizationStats> {
    fit_standardize_slice(ts.values())
}

pub(crate) fn fit_standardize_slice(values: &[f64]) -> Result<StandardizationStats> {
    if values.len() < 2 {
        return Err(ArkanError::SeriesTooShort {
            len: values.len(),
            min: 2,
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 {
        return Err(ArkanError::DegenerateSeries);
    }
    Ok(StandardizationStats { mean, std })
}

/// Applies (or inverts, with `inverse = true`) a standardization.
///
/// Forward maps x to (x - mean) / std; inverse maps y to y * std + mean.
/// The two compose to the identity up to floating point rounding.
pub fn apply_standardize(
    ts: &TimeSeries,
    stats: &StandardizationStats,
    inverse: bool,
) -> TimeSeries {
    let values = if inverse {
        ts.values().iter().map(|v| v * stats.std + stats.mean).collect()
    } else {
        ts.values().iter().map(|v| (v - stats.mean) / stats.std).collect()
    };
    ts.with_values(values)
}

/// Chronological split: the first `floor(ratio * n)` samples become the
/// training side, the rest the test side. Both sides must be non-empty.
pub fn split(ts: &TimeSeries, ratio: f64) -> Result<(TimeSeries, TimeSeries)> {
    if !(ratio.is_finite() && ratio > 0.0 && ratio < 1.0) {
        return Err(ArkanError::InvalidSplit { ratio });
    }
    let n = ts.len();
    // The small nudge keeps ratios like 0.29 * 100 from flooring to 28.
    let n_train = (ratio * n as f64 + 1e-9).floor() as usize;
    if n_train == 0 || n_train >= n {
        return Err(ArkanError::InvalidSplit { ratio });
    }
    let train = TimeSeries {
        values: ts.values[..n_train].to_vec(),
        t0: ts.t0,
        dt: ts.dt,
        name: ts.name.clone(),
    };
    let test = TimeSeries {
        values: ts.values[n_train..].to_vec(),
        t0: ts.t0.map(|t0| t0 + ts.dt.unwrap_or(1.0) * n_train as f64),
        dt: ts.dt,
        name: ts.name.clone(),
    };
    Ok((train, test))
}

/// First difference y(n) = x(n+1) - x(n), one sample shorter.
pub fn difference(ts: &TimeSeries) -> Result<TimeSeries> {
    if ts.len() < 2 {
        return Err(ArkanError::SeriesTooShort {
            len: ts.len(),
            min: 2,
        });
    }
    let values = ts
        .values
        .windows(2)
        .map(|w| w[1] - w[0])
        .collect::<Vec<f64>>();
    Ok(TimeSeries {
        values,
        t0: ts.t0.map(|t0| t0 + ts.dt.unwrap_or(1.0)),
        dt: ts.dt,
        name: ts.name.clone(),
    })
}

pub(crate) fn difference_slice(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Supervised one-step dataset: each input row holds the `p` most recent
/// samples, newest first, and the target is the next sample.
#[derive(Clone, Debug)]
pub struct WindowDataset {
    /// One row per window, laid out `[x(n), x(n-1), ..., x(n-p+1)]`.
    pub inputs: Array2<f64>,
    /// `targets[m]` is the sample following row `m`, i.e. `x(n+1)`.
    pub targets: Array1<f64>,
}

impl WindowDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn p(&self) -> usize {
        self.inputs.ncols()
    }
}

/// Builds lag windows over `ts`, optionally borrowing history from a
/// `context` series that chronologically precedes it.
///
/// Every target lies inside `ts`; context samples only ever appear inside
/// input windows. This is how test windows see the tail of the training
/// split without leaking test targets.
pub fn make_windows(
    ts: &TimeSeries,
    p: usize,
    context: Option<&TimeSeries>,
) -> Result<WindowDataset> {
    if p == 0 {
        return Err(ArkanError::InvalidConfig("window order p must be positive".into()));
    }
    let ctx_len = context.map_or(0, |c| c.len());
    let total = ctx_len + ts.len();
    let first_target = p.max(ctx_len);
    if first_target >= total {
        return Err(ArkanError::SeriesTooShort {
            len: total,
            min: first_target + 1,
        });
    }
    let combined: Vec<f64> = context
        .map_or(&[][..], |c| c.values())
        .iter()
        .chain(ts.values().iter())
        .copied()
        .collect();

    let m = total - first_target;
    let mut inputs = Array2::zeros((m, p));
    let mut targets = Array1::zeros(m);
    for (row, j) in (first_target..total).enumerate() {
        for i in 0..p {
            inputs[[row, i]] = combined[j - 1 - i];
        }
        targets[row] = combined[j];
    }
    Ok(WindowDataset { inputs, targets })
}
