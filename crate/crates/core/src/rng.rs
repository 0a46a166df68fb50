//! Seeded random streams and sample accumulators for Monte Carlo estimators.
//!
//! Every estimator splits its budget over a fixed number of shards. Shard `s`
//! draws from its own ChaCha stream derived from `(seed, s)`, so results are
//! identical regardless of how many threads execute the shards.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

pub const SHARDS: usize = 64;

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 20_240_601;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes a label into a seed so that sub-computations get distinct streams.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `f(rng, count)` on every shard and returns the results in shard order.
pub fn run_sharded<T, F>(seed: u64, total: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    let base = total / SHARDS;
    let extra = total % SHARDS;
    (0..SHARDS)
        .into_par_iter()
        .map(|s| {
            let count = base + usize::from(s < extra);
            let mut rng = stream(seed, s as u64 + 1);
            f(&mut rng, count)
        })
        .collect()
}

pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let r = crate::linalg::norm(&v);
        if r > 1e-12 {
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}

/// Haar-distributed orthonormal frame (rows are the frame vectors).
pub fn random_frame<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Vec<f64>> {
    loop {
        let g: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let refs: Vec<&[f64]> = g.iter().map(|v| v.as_slice()).collect();
        let b = crate::linalg::orthonormal_basis(&refs, 1e-8);
        if b.len() == n {
            return b;
        }
    }
}

/// Uniform barycentric weights on a simplex with `k + 1` vertices.
pub fn barycentric<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let mut e: Vec<f64> = (0..=k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.iter_mut().for_each(|x| *x /= s);
    e
}

/// Streaming mean/variance (Welford) with an order-dependent but deterministic merge.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn merged<'a>(parts: impl IntoIterator<Item = &'a Moments>) -> Moments {
        let mut m = Moments::default();
        for p in parts {
            m.merge(p);
        }
        m
    }

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
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}
