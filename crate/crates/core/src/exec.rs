//! Deterministic block-parallel map.
//!
//! Work is cut into fixed-size blocks whose boundaries depend only on the
//! input length, each block is reduced on its own, and the partial results
//! come back in block order. The caller merges them sequentially, so the
//! floating-point result does not depend on the number of worker threads.

use std::ops::Range;
use std::sync::atomic::{AtomicU8, Ordering};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

static MODE: AtomicU8 = AtomicU8::new(if cfg!(feature = "parallel") { 1 } else { 0 });

/// Select the execution path for subsequent calls (process-wide).
/// Without the `parallel` feature, `Exec::Parallel` is accepted and ignored.
pub fn set_exec(e: Exec) {
    MODE.store(matches!(e, Exec::Parallel) as u8, Ordering::Relaxed);
}

pub fn current_exec() -> Exec {
    if cfg!(feature = "parallel") && MODE.load(Ordering::Relaxed) == 1 {
        Exec::Parallel
    } else {
        Exec::Sequential
    }
}

fn ranges(n: usize, block: usize) -> impl Iterator<Item = Range<usize>> + Clone {
    let block = block.max(1);
    let nb = n.div_ceil(block);
    (0..nb).map(move |b| b * block..((b + 1) * block).min(n))
}

/// Apply `f` to consecutive ranges of `0..n` of length `block` and return
/// the results in range order.
pub fn block_map<T, F>(n: usize, block: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    match current_exec() {
        Exec::Sequential => ranges(n, block).map(f).collect(),
        Exec::Parallel => par_map(ranges(n, block).collect(), f),
    }
}

/// Map over a list of items, preserving order.
pub fn ordered_map<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    match current_exec() {
        Exec::Sequential => items.iter().map(f).collect(),
        Exec::Parallel => {
            let idx: Vec<usize> = (0..items.len()).collect();
            par_map(idx, |i| f(&items[i]))
        }
    }
}

#[cfg(feature = "parallel")]
fn par_map<I: Send, T: Send, F: Fn(I) -> T + Sync + Send>(items: Vec<I>, f: F) -> Vec<T> {
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<I: Send, T: Send, F: Fn(I) -> T + Sync + Send>(items: Vec<I>, f: F) -> Vec<T> {
    items.into_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_cover_range_in_order() {
        let parts = block_map(10, 3, |r| (r.start, r.end));
        assert_eq!(parts, vec![(0, 3), (3, 6), (6, 9), (9, 10)]);
        assert!(block_map(0, 3, |r| r.len()).is_empty());
    }
}
