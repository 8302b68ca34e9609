//! Worker pool used by every render pass.
//!
//! With the `parallel` feature (default) an executor with more than one
//! worker owns a dedicated rayon thread pool; otherwise all work runs on the
//! calling thread in index order.

use std::ops::Range;

use crate::error::{Error, Result};

/// Environment variable consulted by [`Executor::from_env`].
pub const WORKERS_ENV: &str = "POINTRASTER_WORKERS";

pub struct Executor {
    workers: usize,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Executor {
    /// Executor with `workers` threads. Without the `parallel` feature every
    /// request collapses to one sequential worker.
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::invalid_argument("worker count must be at least 1"));
        }
        #[cfg(feature = "parallel")]
        {
            if workers == 1 {
                return Ok(Self::sequential());
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .thread_name(|i| format!("pointraster-{i}"))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(Executor {
                workers,
                pool: Some(pool),
            })
        }
        #[cfg(not(feature = "parallel"))]
        {
            Ok(Self::sequential())
        }
    }

    pub fn sequential() -> Self {
        Executor {
            workers: 1,
            #[cfg(feature = "parallel")]
            pool: None,
        }
    }

    /// Worker count from `POINTRASTER_WORKERS`, else the available hardware
    /// parallelism.
    pub fn from_env() -> Result<Self> {
        Self::new(default_workers()?)
    }

    /// Number of workers that actually execute tasks.
    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn is_parallel(&self) -> bool {
        self.workers > 1
    }

    /// Splits `0..len` into ranges of `chunk` items, folds each range into an
    /// accumulator starting from `identity()`, and combines the accumulators
    /// with `reduce`. Ranges may run on any worker in any order.
    pub fn fold_chunks<T, I, F, R>(&self, len: usize, chunk: usize, identity: I, fold: F, reduce: R) -> T
    where
        T: Send,
        I: Fn() -> T + Sync + Send,
        F: Fn(T, Range<usize>) -> T + Sync + Send,
        R: Fn(T, T) -> T + Sync + Send,
    {
        let chunk = chunk.max(1);
        let n_chunks = len.div_ceil(chunk);
        let range_of = |c: usize| c * chunk..((c + 1) * chunk).min(len);

        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| {
                (0..n_chunks)
                    .into_par_iter()
                    .fold(&identity, |acc, c| fold(acc, range_of(c)))
                    .reduce(&identity, &reduce)
            });
        }

        let _ = &reduce;
        (0..n_chunks).fold(identity(), |acc, c| fold(acc, range_of(c)))
    }

    /// Runs `f` over every chunk range for side effects only.
    pub fn for_each_chunk<F>(&self, len: usize, chunk: usize, f: F)
    where
        F: Fn(Range<usize>) + Sync + Send,
    {
        self.fold_chunks(len, chunk, || (), |(), r| f(r), |(), ()| ());
    }
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor").field("workers", &self.workers).finish()
    }
}

pub fn default_workers() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("{WORKERS_ENV}={v:?} is not a positive integer"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}
