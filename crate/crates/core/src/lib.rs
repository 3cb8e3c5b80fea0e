//! One-step time series forecasting built around a frozen autoregressive
//! memory feeding a spline network.
//!
//! The pipeline standardizes a series, fits Yule-Walker autoregressive
//! coefficients, uses them as fixed per-lag filters over a window of recent
//! samples, and trains a small network on the filtered window. Baselines
//! (plain spline network, plain MLP, MLP on the same memory, and an ARIMA
//! estimated by two-stage least squares) share the same evaluation protocol
//! so their errors are directly comparable.
//!
//! # Modules
//!
//! - [`series`]: series container, CSV IO, standardization, splits, windows
//! - [`armemory`]: autocorrelation, Yule-Walker solvers, the memory filter
//! - [`kan`]: B-spline grids and networks with learnable edge activations
//! - [`nn`]: MLP baseline, MSE loss, Adam, the shared training loop
//! - [`models`]: the five forecasters, one-step evaluation, model documents
//! - [`synth`]: seeded almost-periodic benchmark generators
//! - [`analysis`]: period detection, seasonal decomposition, strength score
//! - [`bench`]: the dataset x noise x model x seed benchmark grid
//!
//! # Parallelism
//!
//! The `parallel` feature (on by default) runs independent work such as
//! benchmark grid cells and rolling forecasts on a rayon pool. Disabling it
//! removes the rayon dependency entirely; every result is identical either
//! way because reductions always happen in a fixed order.

pub mod analysis;
pub mod armemory;
pub mod bench;
pub mod error;
pub mod exec;
pub mod kan;
pub(crate) mod linalg;
pub mod models;
pub mod nn;
pub mod series;
pub mod synth;

pub use error::{ArkanError, Result};
pub use exec::Threading;
pub use series::TimeSeries;

/// Version of the model document format written by [`models::document`].
pub const FORMAT_VERSION: u32 = 1;
