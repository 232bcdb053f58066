//! Data-parallel map with a sequential fallback.
//!
//! All parallelism in the crate goes through this facade: independent circuit
//! evaluations inside a gradient, trials inside a sweep, and snapshot
//! collection. Jobs receive their index and derive their own seed from it, so
//! results are bitwise identical whether the `parallel` feature is enabled or
//! not.

#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    (0..n).map(f).collect()
}
