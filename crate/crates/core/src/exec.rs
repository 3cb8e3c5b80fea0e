//! Execution strategy for data-parallel loops.
//!
//! Hot paths that map over independent items (benchmark grid cells, rolling
//! forecasts, autocorrelation lags) take a [`Threading`] argument. Outputs
//! are collected in index order, so the two strategies produce identical
//! bytes; only wall time differs.

use crate::error::Result;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How a data-parallel loop should run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Threading {
    /// Plain in-order iteration on the calling thread.
    Sequential,
    /// Work-stealing over the rayon pool. Falls back to sequential when the
    /// crate is built without the `parallel` feature.
    #[default]
    Parallel,
}

/// Sizes the global rayon pool; call once, before any parallel work.
///
/// Without the `parallel` feature this logs and returns, since there is no
/// pool to size. A second call is also a no-op (rayon keeps the first pool),
/// which is harmless because the pool size never affects results.
pub fn configure_jobs(jobs: usize) -> Result<()> {
    if jobs == 0 {
        return Err(crate::ArkanError::InvalidConfig(
            "jobs must be at least 1".into(),
        ));
    }
    #[cfg(feature = "parallel")]
    {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            log::debug!("rayon pool already initialized: {e}");
        }
    }
    #[cfg(not(feature = "parallel"))]
    log::warn!("built without the parallel feature, --jobs {jobs} has no effect");
    Ok(())
}

/// Maps `f` over `0..n`, collecting results in index order.
pub(crate) fn map_indexed<T, F>(threading: Threading, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match threading {
        Threading::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Threading::Parallel => (0..n).into_par_iter().map(f).collect(),
        #[cfg(not(feature = "parallel"))]
        Threading::Parallel => (0..n).map(f).collect(),
    }
}

/// Like [`map_indexed`] but short-circuits on the first error.
pub(crate) fn try_map_indexed<T, F>(threading: Threading, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    match threading {
        Threading::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Threading::Parallel => (0..n).into_par_iter().map(f).collect(),
        #[cfg(not(feature = "parallel"))]
        Threading::Parallel => (0..n).map(f).collect(),
    }
}
