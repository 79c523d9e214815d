//! Execution policy for the data-parallel loops.

use std::num::NonZeroUsize;

/// Environment variable that overrides the worker count.
pub const WORKERS_ENV: &str = "CRA_WORKERS";

/// How independent work items are scheduled.
///
/// Every entry point that takes an `Execution` collects results by work-item
/// index, so the output never depends on the schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon's global pool (available parallelism).
    #[default]
    Parallel,
    /// A dedicated pool with exactly this many threads.
    Workers(NonZeroUsize),
}

impl Execution {
    /// Reads [`WORKERS_ENV`]. Unset or unparsable means [`Execution::Parallel`];
    /// `1` means sequential.
    pub fn from_env() -> Self {
        match std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<usize>().ok())
        {
            Some(1) => Execution::Sequential,
            Some(n) => NonZeroUsize::new(n).map_or(Execution::Parallel, Execution::Workers),
            None => Execution::Parallel,
        }
    }

    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            #[cfg(feature = "parallel")]
            Execution::Workers(w) => {
                use rayon::prelude::*;
                match rayon::ThreadPoolBuilder::new().num_threads(w.get()).build() {
                    Ok(pool) => pool.install(|| (0..n).into_par_iter().map(f).collect()),
                    Err(_) => (0..n).map(f).collect(),
                }
            }
            #[cfg(not(feature = "parallel"))]
            Execution::Parallel | Execution::Workers(_) => (0..n).map(f).collect(),
        }
    }
}
