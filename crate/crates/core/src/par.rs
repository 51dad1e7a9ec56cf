//! Data-parallel helpers with a sequential fallback.
//!
//! Every Monte Carlo loop in the crate funnels through these functions. Work
//! items are indexed, and each index owns its own RNG substream, so the result
//! is identical whichever [`Execution`] is chosen.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is on; otherwise identical to
    /// `Sequential`.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Independent stream `index` of the generator seeded by `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `(0..n).map(f).collect()`, possibly in parallel; output order is preserved.
pub fn map_range<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Maps each element of `items` with `f`, possibly in parallel.
pub fn map_slice<S, T, F>(exec: Execution, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Fold `0..n` into per-chunk accumulators and merge them.
///
/// `merge` must be associative. Chunks are fixed-size and merged in index
/// order, so floating-point sums do not depend on the thread count.
pub fn fold_range<A, F, M>(
    exec: Execution,
    n: usize,
    chunk: usize,
    init: impl Fn() -> A + Sync + Send,
    f: F,
    merge: M,
) -> A
where
    A: Send,
    F: Fn(&mut A, usize) + Sync + Send,
    M: Fn(A, A) -> A,
{
    let chunk = chunk.max(1);
    let n_chunks = n.div_ceil(chunk);
    let parts = map_range(exec, n_chunks, |c| {
        let mut acc = init();
        for i in c * chunk..((c + 1) * chunk).min(n) {
            f(&mut acc, i);
        }
        acc
    });
    parts.into_iter().fold(init(), merge)
}
