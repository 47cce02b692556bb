//! Deterministic RNG fan-out for parallel Monte Carlo.
//!
//! Every batch of trials gets its own ChaCha stream derived from the master
//! seed and the batch index, so results do not depend on how rayon schedules
//! the work.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Trials per rayon work item.
pub const BATCH_SIZE: u64 = 8192;

/// Two-sided 99% standard normal quantile.
pub const Z99: f64 = 2.5758293035489004;

/// RNG for stream `index` of master `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `trials` trials split into fixed batches, each with its own stream.
///
/// `work(rng, count)` handles one batch; the per-batch results are returned in
/// batch order so any reduction over them is deterministic.
pub fn batched<A, F>(seed: u64, trials: u64, work: F) -> Vec<A>
where
    A: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> A + Sync,
{
    let batches = trials.div_ceil(BATCH_SIZE);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let count = BATCH_SIZE.min(trials - b * BATCH_SIZE);
            let mut rng = stream(seed, b);
            work(&mut rng, count)
        })
        .collect()
}

/// Streaming mean/variance that merges exactly across batches (Chan et al.).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let total = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / total as f64;
        self.m2 += other.m2 + delta * delta * (self.count as f64) * (other.count as f64) / total as f64;
        self.count = total;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.variance() / self.count as f64).sqrt()
    }

    pub fn combine<'a>(parts: impl IntoIterator<Item = &'a Moments>) -> Moments {
        let mut out = Moments::default();
        for p in parts {
            out.merge(p);
        }
        out
    }
}
