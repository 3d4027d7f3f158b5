//! Deterministic fan-out of independent replicates.

use rayon::prelude::*;
use rayon::ThreadPoolBuilder;

use crate::error::{Result, SimError};

/// Evaluates `f(run)` for `run in 0..runs` on `jobs` workers and returns
/// the results in run order. The output does not depend on `jobs`.
pub fn run_replicates<T, F>(runs: usize, jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if jobs <= 1 {
        return Ok((0..runs).map(f).collect());
    }
    let pool = ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| SimError::Pool(e.to_string()))?;
    Ok(pool.install(|| (0..runs).into_par_iter().map(&f).collect()))
}
