//! Data-parallel dispatch.
//!
//! With the `parallel` feature (default) the loops below fan out over
//! rayon's thread pool; without it they run sequentially. Every cell is
//! computed independently and reductions use the fixed trees from
//! [`crate::numeric`], so the two builds agree bitwise.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map over `0..n`, collecting results in index order.
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
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

/// Apply `f(row_index, row)` to each width-`w` chunk of `out`.
pub(crate) fn for_each_row<F>(out: &mut [f64], w: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    debug_assert_eq!(out.len() % w.max(1), 0);
    #[cfg(feature = "parallel")]
    {
        out.par_chunks_mut(w).enumerate().for_each(|(i, row)| f(i, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        out.chunks_mut(w).enumerate().for_each(|(i, row)| f(i, row));
    }
}
