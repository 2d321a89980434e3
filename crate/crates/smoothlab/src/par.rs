//! Data-parallel enumeration kernels with a sequential fallback.
//!
//! Every kernel is written so that the parallel and sequential paths produce
//! bit-identical results: reductions are restricted to associative,
//! commutative, rounding-free combines (`min` with an index tie-break), and
//! collecting kernels preserve enumeration order. Callers must not produce
//! NaN values.
//!
//! The `seq` module is always compiled so benchmarks can compare both paths
//! in a single build.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Sequential reference implementations.
pub mod seq {
    /// Minimum of `f` over `0..n` with ties resolved to the smallest index.
    pub fn min_by_index(n: u64, mut f: impl FnMut(u64) -> f64) -> Option<(u64, f64)> {
        let mut best: Option<(u64, f64)> = None;
        for i in 0..n {
            let v = f(i);
            match best {
                Some((_, bv)) if bv <= v => {}
                _ => best = Some((i, v)),
            }
        }
        best
    }

    /// `f` mapped over `0..n`, in index order.
    pub fn map_collect<T>(n: usize, f: impl FnMut(usize) -> T) -> Vec<T> {
        (0..n).map(f).collect()
    }

    /// Indices in `0..n` whose mapped value is `Some`, in index order.
    pub fn filter_map_collect<T>(n: u64, f: impl FnMut(u64) -> Option<T>) -> Vec<T> {
        (0..n).filter_map(f).collect()
    }
}

/// Minimum of `f` over `0..n`, ties to the smallest index.
///
/// The combine `(min value, min index on ties)` is associative and
/// commutative, so any partitioning yields the sequential answer.
pub fn min_by_index(n: u64, f: impl Fn(u64) -> f64 + Sync + Send) -> Option<(u64, f64)> {
    #[cfg(feature = "parallel")]
    {
        let best = (0..n)
            .into_par_iter()
            .map(|i| (i, f(i)))
            .reduce(|| (u64::MAX, f64::INFINITY), combine_min);
        if best.0 == u64::MAX {
            None
        } else {
            Some(best)
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        seq::min_by_index(n, f)
    }
}

fn combine_min(a: (u64, f64), b: (u64, f64)) -> (u64, f64) {
    if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) {
        b
    } else {
        a
    }
}

/// [`min_by_index`] with a per-worker scratch value, so hot loops can reuse
/// decode buffers instead of allocating per tuple.
pub fn min_by_index_with<S: Send>(
    n: u64,
    init: impl Fn() -> S + Sync + Send,
    f: impl Fn(&mut S, u64) -> f64 + Sync + Send,
) -> Option<(u64, f64)> {
    #[cfg(feature = "parallel")]
    {
        let best = (0..n)
            .into_par_iter()
            .map_init(&init, |s, i| (i, f(s, i)))
            .reduce(|| (u64::MAX, f64::INFINITY), combine_min);
        if best.0 == u64::MAX {
            None
        } else {
            Some(best)
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut s = init();
        seq::min_by_index(n, move |i| f(&mut s, i))
    }
}

/// `f` mapped over `0..n`, in index order.
pub fn map_collect<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        seq::map_collect(n, f)
    }
}

/// Values of `f` that are `Some`, in index order.
pub fn filter_map_collect<T: Send>(
    n: u64,
    f: impl Fn(u64) -> Option<T> + Sync + Send,
) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().filter_map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        seq::filter_map_collect(n, f)
    }
}

/// Runs `f` inside a rayon pool with the requested thread count.
///
/// `None` uses the default pool. Without the `parallel` feature the argument
/// is ignored and `f` runs on the calling thread.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        match threads {
            None => f(),
            Some(k) => rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .expect("thread pool")
                .install(f),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}
