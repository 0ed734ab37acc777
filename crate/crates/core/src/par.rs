//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) work is spread over the rayon global
//! pool; without it the same closures run on the calling thread. Reductions are
//! always performed over fixed-size chunks combined in index order, so results
//! are bit-identical whichever backend is compiled in and however many threads
//! the pool has.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Rows per work item for chunked reductions.
pub const CHUNK_ROWS: usize = 64;

/// Order-preserving map over `0..len`.
pub fn map_indices<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Splits `0..len` into consecutive `CHUNK_ROWS`-sized ranges and maps each.
/// Output is in range order.
pub fn map_chunks<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
{
    let n_chunks = len.div_ceil(CHUNK_ROWS);
    map_indices(n_chunks, |c| {
        let start = c * CHUNK_ROWS;
        f(start..(start + CHUNK_ROWS).min(len))
    })
}

/// Deterministic sum of `f(i)` over `0..len`.
pub fn sum_indices<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_chunks(len, |r| r.map(&f).sum::<f64>()).into_iter().sum()
}

/// Runs two closures, concurrently when the parallel backend is enabled.
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    #[cfg(feature = "parallel")]
    {
        rayon::join(a, b)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (a(), b())
    }
}
