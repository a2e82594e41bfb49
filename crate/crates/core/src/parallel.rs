//! Replicate execution, in parallel when the `parallel` feature is enabled.
//!
//! Results are always returned in replicate-index order.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Evaluate `f(0), …, f(n − 1)`.
pub fn replicate_map<T, F>(n: u64, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..n).map(f).collect(),
        Execution::Parallel => parallel_map(n, f),
    }
}

/// Like [`replicate_map`], stopping at the lowest-index error.
pub fn try_replicate_map<T, F>(n: u64, exec: Execution, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    replicate_map(n, exec, f).into_iter().collect()
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Run `op` on a pool of `workers` threads (ignored without the `parallel` feature).
pub fn with_workers<R: Send>(workers: usize, op: impl FnOnce() -> R + Send) -> Result<R> {
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Invalid(format!("cannot build worker pool: {e}")))?;
        Ok(pool.install(op))
    }
    #[cfg(not(feature = "parallel"))]
    {
        if workers == 0 {
            return Err(Error::Invalid("worker count must be positive".into()));
        }
        Ok(op())
    }
}
