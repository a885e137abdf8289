//! Data-parallel helpers for embarrassingly parallel scan cells.
//!
//! Parallelism is a runtime choice (`parallel: true/false` in scan
//! configs) so that a single binary can compare both modes. The rayon
//! dependency itself sits behind the `parallel` cargo feature; with the
//! feature off, `map_cells` always runs sequentially and the crate has no
//! rayon in its tree at all.
//!
//! Determinism contract: results are returned in input order, and each
//! cell must derive its randomness from its own index (see
//! `rngstream::cell_seed`), so the two modes produce bitwise-identical
//! output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `f` to each index in `0..n`, in parallel when both the cargo
/// feature and the runtime flag allow it.
pub fn map_cells<T, F>(n: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallel {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

/// True when the build can actually run cells in parallel.
pub fn parallel_available() -> bool {
    cfg!(feature = "parallel")
}
