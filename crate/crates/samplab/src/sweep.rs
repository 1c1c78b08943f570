//! Deterministic map-reduce over index ranges. The range is cut into chunks
//! whose boundaries do not depend on the worker count, chunk results are
//! collected in index order and folded left to right, so the outcome is the
//! same for every degree of parallelism.

use std::ops::Range;

/// Worker configuration; `jobs == 0` means the available parallelism.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Jobs(pub usize);

impl Default for Jobs {
    fn default() -> Self {
        Jobs(0)
    }
}

pub const CHUNK: u64 = 1 << 12;

pub fn map_reduce<T, M, R>(range: Range<u64>, jobs: Jobs, map: M, reduce: R, identity: T) -> T
where
    T: Send,
    M: Fn(Range<u64>) -> T + Sync,
    R: Fn(T, T) -> T,
{
    map_reduce_chunked(range, CHUNK, jobs, map, reduce, identity)
}

/// `map_reduce` with an explicit chunk length.
pub fn map_reduce_chunked<T, M, R>(range: Range<u64>, chunk: u64, jobs: Jobs, map: M, reduce: R, identity: T) -> T
where
    T: Send,
    M: Fn(Range<u64>) -> T + Sync,
    R: Fn(T, T) -> T,
{
    let chunks: Vec<Range<u64>> = chunk_ranges(range, chunk.max(1));
    let parts = run_chunks(&chunks, jobs, &map);
    parts.into_iter().fold(identity, reduce)
}

fn chunk_ranges(range: Range<u64>, chunk: u64) -> Vec<Range<u64>> {
    let mut out = Vec::new();
    let mut s = range.start;
    while s < range.end {
        let e = range.end.min(s.saturating_add(chunk));
        out.push(s..e);
        s = e;
    }
    out
}

#[cfg(feature = "parallel")]
fn run_chunks<T: Send, M: Fn(Range<u64>) -> T + Sync>(chunks: &[Range<u64>], jobs: Jobs, map: &M) -> Vec<T> {
    use rayon::prelude::*;
    let threads = if jobs.0 == 0 { std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1) } else { jobs.0 };
    if threads <= 1 || chunks.len() <= 1 {
        return chunks.iter().cloned().map(map).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| chunks.par_iter().cloned().map(map).collect()),
        Err(_) => chunks.iter().cloned().map(map).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_chunks<T: Send, M: Fn(Range<u64>) -> T + Sync>(chunks: &[Range<u64>], _jobs: Jobs, map: &M) -> Vec<T> {
    chunks.iter().cloned().map(map).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_independent_of_jobs() {
        let run = |j| {
            map_reduce(
                0..50_000,
                Jobs(j),
                |r| r.map(|i| i.to_string()).collect::<Vec<_>>().join(","),
                |a, b| if a.is_empty() { b } else { a + "," + &b },
                String::new(),
            )
        };
        let one = run(1);
        assert_eq!(one, run(3));
        assert_eq!(one.split(',').count(), 50_000);
    }
}
