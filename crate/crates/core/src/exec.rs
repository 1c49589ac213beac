//! Execution strategy for index-parallel work.
//!
//! Work is always split into the same index-addressed units and results are
//! returned in index order, so any reduction performed by the caller sees an
//! identical sequence whether the units ran on one thread or many.

/// How to run a batch of independent work units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Run on the global rayon pool. Without the `parallel` feature this
    /// runs sequentially, as does `ParallelWith`.
    #[default]
    Parallel,
    /// A dedicated pool with the given number of threads.
    ParallelWith(usize),
}

impl Execution {
    pub fn from_workers(workers: Option<usize>) -> Self {
        match workers {
            Some(1) => Execution::Sequential,
            Some(k) => Execution::ParallelWith(k),
            None => Execution::Parallel,
        }
    }

    pub fn is_parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    /// Evaluates `f(0..count)` and returns the results in index order.
    pub fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..count).map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..count).into_par_iter().map(f).collect()
            }
            #[cfg(feature = "parallel")]
            Execution::ParallelWith(workers) => {
                use rayon::prelude::*;
                match rayon::ThreadPoolBuilder::new().num_threads(*workers).build() {
                    Ok(pool) => pool.install(|| (0..count).into_par_iter().map(f).collect()),
                    Err(_) => (0..count).map(f).collect(),
                }
            }
            #[cfg(not(feature = "parallel"))]
            Execution::Parallel | Execution::ParallelWith(_) => (0..count).map(f).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_in_index_order() {
        for exec in [Execution::Sequential, Execution::Parallel, Execution::ParallelWith(3)] {
            let out = exec.map(100, |i| i * i);
            assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
        }
    }

    #[test]
    fn workers_mapping() {
        assert_eq!(Execution::from_workers(Some(1)), Execution::Sequential);
        assert_eq!(Execution::from_workers(None), Execution::Parallel);
        assert_eq!(Execution::from_workers(Some(4)), Execution::ParallelWith(4));
    }
}
