//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the indexed maps run on rayon;
//! without it they degrade to plain loops. Both paths collect results in
//! index order, so output bytes never depend on the feature or on the
//! thread count. The `PVNOWCAST_THREADS` environment variable caps the
//! rayon worker count.

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    (0..n).map(f).collect()
}

/// Always-sequential variant, kept for benchmarking against the parallel
/// path within a single build.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Worker cap from `PVNOWCAST_THREADS`, if set to a positive integer.
pub fn thread_cap_from_env() -> Option<usize> {
    std::env::var("PVNOWCAST_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Initialize the global rayon pool honouring `PVNOWCAST_THREADS`.
///
/// A no-op when the pool is already built or the feature is disabled.
#[cfg(feature = "parallel")]
pub fn init_thread_pool_from_env() {
    if let Some(n) = thread_cap_from_env() {
        // Ignore the error: the global pool can only be built once.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

#[cfg(not(feature = "parallel"))]
pub fn init_thread_pool_from_env() {}

/// Run `f` on a dedicated pool of `threads` workers (or inline without the
/// `parallel` feature). Used by determinism tests to pin the thread count.
#[cfg(feature = "parallel")]
pub fn with_thread_count<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
pub fn with_thread_count<T: Send>(_threads: usize, f: impl FnOnce() -> T + Send) -> T {
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_indexed_preserves_order() {
        let out = map_indexed(100, |i| i * i);
        assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn seq_and_dispatch_agree() {
        let a = map_indexed(1000, |i| (i as f64).sin());
        let b = map_indexed_seq(1000, |i| (i as f64).sin());
        assert_eq!(a, b);
    }

    #[test]
    fn parallel_matches_across_thread_counts() {
        let one = with_thread_count(1, || map_indexed(500, |i| (i as f64).sqrt()));
        let four = with_thread_count(4, || map_indexed(500, |i| (i as f64).sqrt()));
        assert_eq!(one, four);
    }
}
