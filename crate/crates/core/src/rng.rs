//! Seeded uniform sampling with a fixed algorithm.
//!
//! Everything random in the crate goes through ChaCha8 with explicit stream
//! selection, and floats are built from the top 53 bits of `next_u64`, so
//! generated instances and cost jitter are identical on every platform and
//! independent of `rand` distribution internals.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub struct UniformStream {
    rng: ChaCha8Rng,
}

impl UniformStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        UniformStream { rng }
    }

    /// Uniform in [0, 1).
    pub fn next_unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn next_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_unit()
    }

    /// Uniform integer in [lo, hi] (inclusive).
    pub fn next_int(&mut self, lo: u64, hi: u64) -> u64 {
        let span = hi - lo + 1;
        lo + ((self.rng.next_u64() as u128 * span as u128) >> 64) as u64
    }
}
