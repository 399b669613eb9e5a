//! Chunked execution with a fixed chunk layout.
//!
//! Work is always split into the same chunks regardless of how many threads
//! run them, and chunk results come back in chunk order. Reductions over the
//! returned vector are therefore bit-identical between the sequential and the
//! rayon paths.

use std::ops::Range;

/// Number of items handled by one chunk (training samples or Monte Carlo trials).
pub const CHUNK_LEN: usize = 1024;

/// How chunked work is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise falls back to sequential.
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Splits `0..len` into consecutive chunks of `chunk_len` items.
pub fn chunk_ranges(len: usize, chunk_len: usize) -> Vec<Range<usize>> {
    assert!(chunk_len > 0);
    (0..len.div_ceil(chunk_len))
        .map(|c| c * chunk_len..((c + 1) * chunk_len).min(len))
        .collect()
}

/// Applies `f(chunk_index, range)` to every chunk of `0..len`, returning results in chunk order.
pub fn map_chunks<R, F>(exec: Exec, len: usize, chunk_len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize, Range<usize>) -> R + Sync + Send,
{
    let ranges = chunk_ranges(len, chunk_len);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return ranges
            .into_par_iter()
            .enumerate()
            .map(|(c, r)| f(c, r))
            .collect();
    }
    let _ = exec;
    ranges.into_iter().enumerate().map(|(c, r)| f(c, r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_cover_everything_once() {
        let r = chunk_ranges(2500, 1024);
        assert_eq!(r, vec![0..1024, 1024..2048, 2048..2500]);
        assert!(chunk_ranges(0, 8).is_empty());
    }

    #[test]
    fn parallel_matches_sequential_order() {
        let f = |c: usize, r: Range<usize>| (c, r.map(|i| (i as f64).sqrt()).sum::<f64>());
        let a = map_chunks(Exec::Sequential, 10_000, 333, f);
        let b = map_chunks(Exec::Parallel, 10_000, 333, f);
        assert_eq!(a, b);
    }
}
