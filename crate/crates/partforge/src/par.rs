//! Data-parallel helpers. With the `parallel` feature (default) batch work
//! fans out over a rayon pool sized by `PARTFORGE_THREADS`; without it the
//! same entry points run sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Number of worker threads: `PARTFORGE_THREADS` if set, else rayon's default.
pub fn thread_count() -> usize {
    std::env::var("PARTFORGE_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| {
            #[cfg(feature = "parallel")]
            {
                rayon::current_num_threads()
            }
            #[cfg(not(feature = "parallel"))]
            {
                1
            }
        })
}

#[cfg(feature = "parallel")]
fn pool() -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .expect("thread pool")
}

/// Map a function over items, in parallel when the feature allows it.
/// Output order always matches input order.
#[cfg(feature = "parallel")]
pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    pool().install(|| items.into_par_iter().map(f).collect())
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

/// Sequential reference path, always available so benches can compare.
pub fn seq_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}
