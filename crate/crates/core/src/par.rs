//! Data-parallel map over independent grid points.
//!
//! Sweeps dispatch through [`maybe_par_map`], which uses rayon when the
//! `parallel` feature is enabled and falls back to a plain sequential map
//! otherwise. Output order always follows input order, so results are
//! identical regardless of worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Sequential map, kept callable in all builds for benchmark comparison.
pub fn seq_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn maybe_par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn maybe_par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    seq_map(items, f)
}
