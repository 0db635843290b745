//! Independent replica runs.
//!
//! Every replica owns its own noise stream, so results depend only on the
//! replica index and never on scheduling. With the `parallel` feature the
//! replicas are spread over a rayon pool; without it they run in order.

/// Runs `f(0..count)` sequentially, in index order.
pub fn run_replicas_sequential<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..count as u64).map(f).collect()
}

/// Runs `f(0..count)` and returns the results in index order.
///
/// `threads` caps the worker count (`None` uses rayon's default). Ignored
/// without the `parallel` feature.
#[cfg(feature = "parallel")]
pub fn run_replicas<T, F>(count: usize, threads: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;

    let work = || (0..count as u64).into_par_iter().map(&f).collect();
    match threads {
        Some(1) => run_replicas_sequential(count, &f),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(work),
            Err(_) => work(),
        },
        None => work(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn run_replicas<T, F>(count: usize, _threads: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    run_replicas_sequential(count, f)
}
