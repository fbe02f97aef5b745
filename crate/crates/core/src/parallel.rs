//! Thread-pool scoping and thread-count independent work partitioning.

use rayon::ThreadPoolBuilder;

/// Runs `f` on a dedicated pool of `threads` workers (0 = rayon's global pool).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    if threads == 0 {
        return f();
    }
    match ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Splits `start..end` into consecutive ranges of at most `chunk` items.
/// The split depends only on its arguments, never on the worker count.
pub fn chunks(start: u64, end: u64, chunk: u64) -> Vec<(u64, u64)> {
    assert!(chunk > 0);
    let mut out = Vec::with_capacity(((end.saturating_sub(start)) / chunk + 1) as usize);
    let mut lo = start;
    while lo < end {
        let hi = end.min(lo.saturating_add(chunk));
        out.push((lo, hi));
        lo = hi;
    }
    out
}
