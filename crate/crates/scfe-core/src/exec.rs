//! Batch execution over independent instances.
//!
//! Counterfactual searches for different factual points share read-only state
//! (classifier, plausibility model, box) and never talk to each other, so a
//! batch is a plain ordered map. `jobs` picks the strategy:
//!
//! * 1: run sequentially on the calling thread,
//! * 0: use one worker per available core,
//! * n: use a pool of exactly n workers.
//!
//! Results always come back in input order, so batch output is independent of
//! scheduling. Without the `parallel` feature every setting degrades to the
//! sequential path, which keeps the crate buildable with no thread pool
//! dependency at all.

use crate::error::Result;
#[cfg(feature = "parallel")]
use crate::error::ScfeError;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `f` to every item, preserving input order in the output.
#[cfg(feature = "parallel")]
pub fn ordered_map<T, U, F>(jobs: usize, items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    if jobs == 1 {
        return Ok(items.iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| ScfeError::invalid(format!("cannot build a {jobs}-thread pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(f).collect()))
}

/// Sequential fallback used when the `parallel` feature is disabled.
#[cfg(not(feature = "parallel"))]
pub fn ordered_map<T, U, F>(_jobs: usize, items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    Ok(items.iter().map(f).collect())
}
