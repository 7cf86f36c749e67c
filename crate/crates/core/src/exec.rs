//! Per-sample fan-out with ordered results.
//!
//! Work items are mapped independently (in parallel when a pool is present)
//! and always returned in index order; callers reduce them sequentially, so
//! results are bit-identical for any thread count.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "MYVT_THREADS";

#[derive(Clone, Default)]
pub struct Executor {
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor").field("threads", &self.threads()).finish()
    }
}

impl Executor {
    pub fn sequential() -> Self {
        Self { pool: None }
    }

    pub fn with_threads(threads: usize) -> Result<Self> {
        if threads <= 1 {
            return Ok(Self::sequential());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
        Ok(Self { pool: Some(Arc::new(pool)) })
    }

    /// Reads `MYVT_THREADS`; unset means single-threaded.
    pub fn from_env() -> Result<Self> {
        match std::env::var(THREADS_ENV) {
            Err(_) => Ok(Self::sequential()),
            Ok(v) => {
                let n: usize = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
                Self::with_threads(n)
            }
        }
    }

    pub fn threads(&self) -> usize {
        self.pool.as_ref().map_or(1, |p| p.current_num_threads())
    }

    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match &self.pool {
            None => (0..n).map(f).collect(),
            Some(pool) => pool.install(|| (0..n).into_par_iter().map(f).collect()),
        }
    }
}
