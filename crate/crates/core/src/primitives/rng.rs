use rand_chacha::ChaCha20Rng;
use rand_core::{Rng, SeedableRng};

use super::RandomSeed;

/// ChaCha20 stream keyed by an explicit seed.
///
/// Every sampling helper here is written against raw `u32`/`u64` output so
/// the mapping from seed to values never depends on a library's
/// distribution code.
pub struct SeededRng {
    inner: ChaCha20Rng,
}

impl SeededRng {
    pub fn new(seed: &RandomSeed) -> Self {
        Self {
            inner: ChaCha20Rng::from_seed(seed.0),
        }
    }

    pub fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn fill(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest);
    }

    pub fn bytes<const N: usize>(&mut self) -> [u8; N] {
        let mut out = [0u8; N];
        self.fill(&mut out);
        out
    }

    pub fn seed(&mut self) -> RandomSeed {
        RandomSeed(self.bytes())
    }

    /// Uniform integer in `[0, bound)` by rejection sampling.
    ///
    /// # Panics
    ///
    /// Panics if `bound == 0`.
    pub fn below(&mut self, bound: u32) -> u32 {
        assert!(bound > 0, "empty range");
        let zone = u32::MAX - (u32::MAX - bound + 1) % bound;
        loop {
            let x = self.next_u32();
            if x <= zone {
                return x % bound;
            }
        }
    }

    /// Uniform integer in `[-bound, bound]`.
    pub fn centered(&mut self, bound: u32) -> i64 {
        i64::from(self.below(2 * bound + 1)) - i64::from(bound)
    }

    pub fn bit(&mut self) -> bool {
        self.next_u32() & 1 == 1
    }
}
