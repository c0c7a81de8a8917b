//! Order-stable map helpers that run on rayon when the `parallel` feature is
//! enabled and fall back to plain iteration otherwise.
//!
//! Every call site derives per-item RNG streams and collects in index order,
//! so results are bitwise identical across both modes and any thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map over a slice, preserving order.
#[cfg(feature = "parallel")]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// Map over a slice, preserving order.
#[cfg(not(feature = "parallel"))]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Map over `0..n`, preserving order.
#[cfg(feature = "parallel")]
pub fn par_map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Map over `0..n`, preserving order.
#[cfg(not(feature = "parallel"))]
pub fn par_map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

/// True when this build runs the rayon-backed code paths.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}

/// Cap the worker count for all parallel maps. Effective only before the
/// first parallel call of the process and only in parallel builds; returns
/// whether the cap took hold. Results never depend on the thread count.
#[cfg(feature = "parallel")]
pub fn configure_threads(n: usize) -> bool {
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_ok()
}

/// Sequential builds have no pool to configure.
#[cfg(not(feature = "parallel"))]
pub fn configure_threads(_n: usize) -> bool {
    false
}
