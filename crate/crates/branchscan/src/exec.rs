//! Parallel/sequential execution helpers.
//!
//! With the `parallel` feature (default) `map_indexed` fans out over rayon;
//! without it, it degrades to a plain loop. Callers are written so that both
//! paths perform identical floating-point operations per element, which keeps
//! parallel results bit-identical to the sequential fallback.

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Always-sequential twin of [`map_indexed`], used by the `*_seq` API
/// variants and by determinism tests.
pub(crate) fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
