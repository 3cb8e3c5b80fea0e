//! Synthetic almost-periodic benchmark signals.
//!
//! Both functions sum two sinusoids whose frequencies have an irrational
//! ratio, so the sum never repeats exactly even though each part is
//! periodic. Gaussian noise is added pointwise from a seeded generator.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ArkanError, Result};
use crate::series::TimeSeries;

/// Which benchmark signal to sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthFunction {
    /// `cos(2t) + cos(2*pi*t)`
    F1,
    /// `sin(3t) + sin(2*e*t)`
    F2,
}

impl SynthFunction {
    /// The noiseless signal value at time `t`.
    pub fn clean_value(&self, t: f64) -> f64 {
        match self {
            SynthFunction::F1 => (2.0 * t).cos() + (2.0 * PI * t).cos(),
            SynthFunction::F2 => (3.0 * t).sin() + (2.0 * E * t).sin(),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            SynthFunction::F1 => "f1",
            SynthFunction::F2 => "f2",
        }
    }
}

impl fmt::Display for SynthFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SynthFunction {
    type Err = ArkanError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f1" => Ok(SynthFunction::F1),
            "f2" => Ok(SynthFunction::F2),
            other => Err(ArkanError::UnknownTag {
                tag: other.to_string(),
                expected: "f1|f2",
            }),
        }
    }
}

/// Sampling plan for one synthetic series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub function: SynthFunction,
    /// Noise standard deviation.
    pub sigma: f64,
    /// Number of samples, spaced evenly with both endpoints included.
    pub n: usize,
    /// Time runs over `[0, t_max]`.
    pub t_max: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// The benchmark setup: 500 samples over `[0, 8*pi]`.
    pub fn standard(function: SynthFunction, sigma: f64, seed: u64) -> Self {
        SynthSpec {
            function,
            sigma,
            n: 500,
            t_max: 8.0 * PI,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(ArkanError::InvalidConfig(
                "synthetic series needs at least 2 samples".into(),
            ));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(ArkanError::InvalidConfig(
                "sigma must be finite and non-negative".into(),
            ));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(ArkanError::InvalidConfig(
                "t_max must be positive and finite".into(),
            ));
        }
        Ok(())
    }
}

/// Samples the signal on an inclusive linspace and adds `sigma`-scaled
/// Gaussian noise, one draw per sample in time order.
pub fn generate(spec: &SynthSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let dt = spec.t_max / (spec.n - 1) as f64;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let values: Vec<f64> = (0..spec.n)
        .map(|i| {
            let t = i as f64 * dt;
            let eps: f64 = StandardNormal.sample(&mut rng);
            spec.function.clean_value(t) + spec.sigma * eps
        })
        .collect();
    TimeSeries::with_time(spec.function.tag(), values, 0.0, dt)
}
