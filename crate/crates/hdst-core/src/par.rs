//! Data-parallel map helpers.
//!
//! With the default `parallel` feature the maps run on the rayon pool;
//! without it they fall back to plain sequential iteration. Results are
//! collected in index order either way, so callers observe identical output
//! regardless of the backend or thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Fallible variant: short-circuits on the first error (by index order).
pub fn try_map_indexed<T, F>(n: usize, f: F) -> crate::Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> crate::Result<T> + Sync + Send,
{
    map_indexed(n, f).into_iter().collect()
}
