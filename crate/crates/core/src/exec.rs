//! Data-parallel helpers.
//!
//! Per-person work is mapped through [`map_indexed`], which uses rayon when the
//! `parallel` feature is enabled and [`Execution::Parallel`] is requested, and a
//! plain loop otherwise. Reductions go through [`ordered_column_sums`], whose
//! result depends only on the multiset of contributions, so worker count and
//! person order never change a single bit of the output.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// True when work will actually be spread over a thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel. Output order is always index order.
pub fn map_indexed<T, F>(n: usize, execution: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if execution == Execution::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = execution;
    (0..n).map(f).collect()
}

/// Column sums of a row-major `rows × width` table, summing each column in
/// sorted order so the result is invariant to row permutations.
pub fn ordered_column_sums(rows: &[Vec<f64>], width: usize, execution: Execution) -> Vec<f64> {
    map_indexed(width, execution, |c| {
        let mut column: Vec<f64> = rows.iter().map(|r| r[c]).collect();
        ordered_sum(&mut column)
    })
}

/// Sum after sorting with the IEEE total order.
pub fn ordered_sum(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    values.iter().sum()
}
