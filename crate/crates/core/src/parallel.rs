//! Data-parallel helpers with a sequential fallback.
//!
//! Reductions split the index range into fixed-size chunks, fold each chunk
//! in index order and merge the chunk results with a pairwise tree. The chunk
//! layout does not depend on the number of threads, so the parallel and the
//! sequential paths return bit-identical results.

use serde::{Deserialize, Serialize};

/// Number of items folded sequentially before the tree merge.
pub const CHUNK: usize = 64;

/// How per-item work is scheduled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Execution {
    /// Use the rayon pool when the `parallel` feature is enabled.
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// Whether this build can actually run in parallel.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Evaluates `f` on `0..n` and returns results in index order.
pub fn map_collect<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Folds `0..n` in fixed chunks and merges chunk accumulators pairwise.
///
/// Returns `init()` when `n == 0`.
pub fn chunked_reduce<A, I, F, M>(exec: Execution, n: usize, init: I, fold: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, usize) + Sync + Send,
    M: Fn(A, A) -> A,
{
    let n_chunks = n.div_ceil(CHUNK);
    let partials = map_collect(exec, n_chunks, |c| {
        let mut acc = init();
        let end = ((c + 1) * CHUNK).min(n);
        for i in c * CHUNK..end {
            fold(&mut acc, i);
        }
        acc
    });
    pairwise_merge(partials, merge).unwrap_or_else(init)
}

/// Merges items with a balanced binary tree in index order.
pub fn pairwise_merge<A, M>(mut items: Vec<A>, merge: M) -> Option<A>
where
    M: Fn(A, A) -> A,
{
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(merge(a, b)),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop()
}

/// Pairwise sum of a slice.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
