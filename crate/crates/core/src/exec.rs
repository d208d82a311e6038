//! Batched, reproducible Monte Carlo execution.
//!
//! Work is cut into fixed-size batches. Batch `i` draws from a ChaCha8
//! stream `i` keyed by the run seed, and batch results are reduced in batch
//! order, so the output depends on the seed only and not on the number of
//! worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Samples per batch.
pub const BATCH_SIZE: usize = 1024;
/// Default cap on the number of leaves of a sampled tree.
pub const DEFAULT_N_MAX: usize = 1_000_000;

/// How batches are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Execution {
    workers: usize,
}

impl Execution {
    pub fn sequential() -> Self {
        Execution { workers: 1 }
    }

    /// Runs on `workers` threads; `0` means one per available core.
    pub fn parallel(workers: usize) -> Self {
        let workers = if workers == 0 { std::thread::available_parallelism().map_or(1, |n| n.get()) } else { workers };
        Execution { workers }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn is_parallel(&self) -> bool {
        cfg!(feature = "parallel") && self.workers > 1
    }
}

impl Default for Execution {
    fn default() -> Self {
        Execution::parallel(0)
    }
}

/// Shared Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub samples: usize,
    pub seed: u64,
    pub execution: Execution,
    pub n_max: usize,
}

impl MonteCarlo {
    pub fn new(samples: usize, seed: u64) -> Self {
        MonteCarlo { samples, seed, execution: Execution::default(), n_max: DEFAULT_N_MAX }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    /// Same settings with a seed derived from `tag`.
    pub fn substream(&self, tag: u64) -> Self {
        MonteCarlo { seed: derive_seed(self.seed, tag), ..*self }
    }
}

/// SplitMix64 finalizer applied to `seed ^ tag`-style mixing.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for batch `index` of a run keyed by `seed`.
pub fn batch_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Evaluates `f(rng, count)` for every batch and returns the results in
/// batch order. The sizes of all batches sum to `samples`.
pub fn map_batches<T, F>(samples: usize, seed: u64, execution: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    let n_batches = samples.div_ceil(BATCH_SIZE);
    let run = |i: usize| {
        let count = BATCH_SIZE.min(samples - i * BATCH_SIZE);
        let mut rng = batch_rng(seed, i as u64);
        f(&mut rng, count)
    };
    #[cfg(feature = "parallel")]
    if execution.is_parallel() && n_batches > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(execution.workers()).build();
        if let Ok(pool) = pool {
            return pool.install(|| (0..n_batches).into_par_iter().map(run).collect());
        }
    }
    let _ = execution;
    (0..n_batches).map(run).collect()
}

/// Runs batches and folds the per-batch accumulators in batch order.
pub fn reduce_batches<A, F>(samples: usize, seed: u64, execution: Execution, f: F) -> A
where
    A: Accumulate + Send,
    F: Fn(&mut ChaCha8Rng, usize) -> A + Sync,
{
    let mut parts = map_batches(samples, seed, execution, f).into_iter();
    let mut acc = parts.next().unwrap_or_default();
    for p in parts {
        acc.merge(&p);
    }
    acc
}

/// Like [`reduce_batches`] for batch functions that can fail; the first
/// error in batch order is returned.
pub fn try_reduce_batches<A, F>(samples: usize, seed: u64, execution: Execution, f: F) -> crate::Result<A>
where
    A: Accumulate + Send,
    F: Fn(&mut ChaCha8Rng, usize) -> crate::Result<A> + Sync,
{
    let mut acc = A::default();
    for part in map_batches(samples, seed, execution, f) {
        acc.merge(&part?);
    }
    Ok(acc)
}

/// Mergeable accumulator.
pub trait Accumulate: Default {
    fn merge(&mut self, other: &Self);
}

/// Running mean and variance (Welford, with Chan's merge).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Summary {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

impl Accumulate for Summary {
    fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = self.count + other.count;
        let d = other.mean - self.mean;
        let w = other.count as f64 / n as f64;
        self.mean += d * w;
        self.m2 += other.m2 + d * d * self.count as f64 * w;
        self.count = n;
    }
}

impl Extend<f64> for Summary {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.push(x);
        }
    }
}

impl<A: Accumulate> Accumulate for Vec<A> {
    fn merge(&mut self, other: &Self) {
        if self.is_empty() {
            self.extend(other.iter().map(|_| A::default()));
        }
        for (a, b) in self.iter_mut().zip(other) {
            a.merge(b);
        }
    }
}
