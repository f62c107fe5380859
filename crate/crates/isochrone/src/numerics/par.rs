//! Deterministic parallel map for grid sweeps.
//!
//! Results are collected in input order regardless of scheduling, so sweep
//! output is independent of the thread count. The thread count defaults to
//! 1 (sequential) and is typically taken from the `ISOCHRONE_THREADS`
//! environment variable by the caller.

/// Apply `f` to every item, using up to `threads` worker threads, and
/// return the results in input order.
pub fn map_ordered<T, U, F>(items: &[T], threads: usize, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync,
{
    let threads = threads.max(1).min(items.len().max(1));
    if threads == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    let mut results: Vec<Vec<U>> = Vec::with_capacity(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| scope.spawn(|| part.iter().map(&f).collect::<Vec<U>>()))
            .collect();
        for h in handles {
            results.push(h.join().expect("sweep worker panicked"));
        }
    });
    results.into_iter().flatten().collect()
}

/// Read the thread cap from `ISOCHRONE_THREADS` (default 1, minimum 1).
pub fn thread_count_from_env() -> usize {
    std::env::var("ISOCHRONE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(1)
        .max(1)
}
