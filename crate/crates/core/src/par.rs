//! Execution mode switch shared by the data-parallel loops.

use serde::{Deserialize, Serialize};

/// How independent work items (matrix columns, images, split iterations) are
/// scheduled. Output is identical in both modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parallelism {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is enabled, otherwise
    /// falls back to sequential execution.
    #[default]
    Parallel,
}

impl Parallelism {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Parallel
    }
}

/// Maps `f` over `0..len`, preserving index order in the output.
pub fn map_indexed<T, F>(len: usize, mode: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..len).map(f).collect()
}

/// Like [`map_indexed`] for fallible work; the first error by index wins so
/// the reported failure does not depend on scheduling.
pub fn try_map_indexed<T, E, F>(len: usize, mode: Parallelism, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Send + Sync,
{
    map_indexed(len, mode, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_preserve_order() {
        let seq = map_indexed(1000, Parallelism::Sequential, |i| i * i);
        let par = map_indexed(1000, Parallelism::Parallel, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq[31], 961);
    }

    #[test]
    fn first_error_by_index_is_reported() {
        let r: Result<Vec<usize>, usize> = try_map_indexed(100, Parallelism::Parallel, |i| {
            if i % 10 == 7 {
                Err(i)
            } else {
                Ok(i)
            }
        });
        assert_eq!(r, Err(7));
    }
}
