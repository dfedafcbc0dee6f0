//! Reproducible random streams.
//!
//! Every stochastic computation is split into fixed-size blocks and each
//! block draws from its own ChaCha stream, so results do not depend on how
//! blocks are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Samples per independent stream in Monte Carlo loops.
pub const BLOCK: usize = 4096;

/// The generator for block `stream` of a computation seeded with `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed, used to give sub-experiments disjoint streams.
pub fn derive(seed: u64, tag: u64) -> u64 {
    // SplitMix64 finaliser.
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mean and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Running sums accumulated per block and merged in block order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    pub n: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(mut self, other: Moments) -> Moments {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self
    }

    pub fn estimate(&self) -> Estimate {
        let n = self.n.max(1) as f64;
        let mean = self.sum / n;
        let var = ((self.sum_sq / n) - mean * mean).max(0.0);
        Estimate { value: mean, stderr: (var / (n - 1.0).max(1.0)).sqrt() }
    }
}
