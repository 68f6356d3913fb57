//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) the helpers dispatch to rayon,
//! otherwise they run sequentially. Reductions are always performed over
//! fixed-size chunks whose partial results are combined in index order, so
//! floating-point results are bitwise identical regardless of thread count
//! or feature selection.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length used by [`sum_indexed`].
pub const REDUCE_CHUNK: usize = 256;

/// Evaluates `f(i)` for `i in 0..n`, returning results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Deterministic sum of `f(i)` over `0..n`.
pub fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(REDUCE_CHUNK);
    let partials = map_indexed(chunks, |c| {
        let lo = c * REDUCE_CHUNK;
        let hi = (lo + REDUCE_CHUNK).min(n);
        (lo..hi).map(&f).sum::<f64>()
    });
    partials.into_iter().sum()
}

/// Fills `out[i] = f(i)` in parallel, writing rows of `row_len` at a time.
pub fn fill_rows<T, F>(out: &mut [T], row_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        out.par_chunks_mut(row_len)
            .enumerate()
            .for_each(|(r, row)| f(r, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        out.chunks_mut(row_len)
            .enumerate()
            .for_each(|(r, row)| f(r, row));
    }
}

/// Number of worker threads the helpers will use.
pub fn threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}
