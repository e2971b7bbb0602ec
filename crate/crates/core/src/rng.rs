//! Counter-based seed streams.
//!
//! Every Monte-Carlo draw is addressed by a `(master, counter)` pair that is
//! hashed into an independent 64-bit seed, so realization `i` produces the same
//! numbers no matter which thread evaluates it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A family of independent seeds keyed by a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    master: u64,
}

impl SeedStream {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Seed for counter `index`.
    pub fn seed(&self, index: u64) -> u64 {
        mix64(mix64(self.master) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
    }

    /// A child stream, e.g. one per sweep point or per purpose.
    pub fn child(&self, key: u64) -> SeedStream {
        SeedStream::new(self.seed(key ^ 0xA076_1D64_78BD_642F))
    }
}

/// Generator used for all stochastic draws.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
