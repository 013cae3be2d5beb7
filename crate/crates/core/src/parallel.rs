//! Trial-level parallelism with deterministic output order.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Parallel-map capability handed to experiments.
///
/// Results always come back in trial-index order, so any reduction done by
/// the caller is independent of the worker count.
#[derive(Clone, Default)]
pub struct Executor {
    pool: Option<Arc<rayon::ThreadPool>>,
    sequential: bool,
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor").field("threads", &self.threads()).finish()
    }
}

impl Executor {
    /// Runs on the calling thread only.
    pub fn sequential() -> Self {
        Executor { pool: None, sequential: true }
    }

    /// Dedicated pool with `threads` workers; `0` means all cores.
    pub fn with_threads(threads: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::resource(format!("cannot build thread pool: {e}")))?;
        Ok(Executor { pool: Some(Arc::new(pool)), sequential: false })
    }

    pub fn threads(&self) -> usize {
        match (&self.pool, self.sequential) {
            (_, true) => 1,
            (Some(p), _) => p.current_num_threads(),
            (None, _) => rayon::current_num_threads(),
        }
    }

    /// Evaluates `f(i)` for `i in 0..trials`.
    pub fn map_trials<T, F>(&self, trials: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        if self.sequential {
            return (0..trials).map(f).collect();
        }
        let run = || (0..trials).into_par_iter().map(&f).collect();
        match &self.pool {
            Some(pool) => pool.install(run),
            None => run(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_for_any_pool() {
        let expect: Vec<usize> = (0..1000).map(|i| i * i).collect();
        for exec in [Executor::sequential(), Executor::with_threads(3).unwrap(), Executor::default()] {
            assert_eq!(exec.map_trials(1000, |i| i * i), expect);
        }
    }
}
