//! Execution strategy for the data-parallel loops of the crate.
//!
//! Every parallel loop goes through [`map_indexed`], so results are
//! collected in input order and any reduction downstream is performed in a
//! fixed order. Output is therefore bit-identical between
//! [`ExecMode::Sequential`] and [`ExecMode::Parallel`], and independent of
//! the rayon thread count.
//!
//! Without the `parallel` feature, `ExecMode::Parallel` silently runs
//! sequentially.

use crate::linalg::CMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExecMode {
    Sequential,
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

/// Evaluates `f(0..n)` and returns the results in index order.
pub fn map_indexed<R, F>(mode: ExecMode, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Maps a slice, preserving order.
pub fn map_slice<T, R, F>(mode: ExecMode, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_indexed(mode, items.len(), |i| f(&items[i]))
}

/// Fixed-tree pairwise sum. Empty input yields `None`.
pub fn pairwise_sum(mut terms: Vec<CMatrix>) -> Option<CMatrix> {
    if terms.is_empty() {
        return None;
    }
    while terms.len() > 1 {
        let mut next = Vec::with_capacity(terms.len().div_ceil(2));
        let mut it = terms.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a + b),
                None => next.push(a),
            }
        }
        terms = next;
    }
    terms.pop()
}

/// Sums `f(i)` for `i in 0..n` in chunks of `chunk` terms. Chunk partial sums
/// are accumulated sequentially, then combined with [`pairwise_sum`].
pub fn chunked_sum<F>(mode: ExecMode, n: usize, chunk: usize, rows: usize, cols: usize, f: F) -> CMatrix
where
    F: Fn(usize) -> CMatrix + Sync + Send,
{
    let chunk = chunk.max(1);
    let nchunks = n.div_ceil(chunk);
    let partials = map_indexed(mode, nchunks, |c| {
        let mut acc = CMatrix::zeros(rows, cols);
        for i in c * chunk..((c + 1) * chunk).min(n) {
            acc += f(i);
        }
        acc
    });
    pairwise_sum(partials).unwrap_or_else(|| CMatrix::zeros(rows, cols))
}
