//! Parallel dispatch helpers. With the `parallel` feature the per-start-index
//! sweeps and per-trial experiment runs fan out over rayon; without it the
//! same code runs sequentially. Results are combined order-independently
//! (max / collect-then-sort), so both paths produce identical output.

/// Caps the worker pool from the `ROUGHLAB_THREADS` environment variable.
/// Call once at process start; later calls and unset/invalid values are
/// no-ops. Without the `parallel` feature everything is sequential anyway.
pub fn init_thread_pool() {
    #[cfg(feature = "parallel")]
    {
        if let Ok(v) = std::env::var("ROUGHLAB_THREADS") {
            if let Ok(threads) = v.parse::<usize>() {
                if threads >= 1 {
                    let _ = rayon::ThreadPoolBuilder::new()
                        .num_threads(threads)
                        .build_global();
                }
            }
        }
    }
}

/// Max of `f(i)` over `0..n`. NaN-free inputs assumed.
pub fn max_over<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).reduce(|| 0.0, f64::max)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).fold(0.0, f64::max)
    }
}

/// Maps `f` over `0..n`, preserving index order in the output.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
