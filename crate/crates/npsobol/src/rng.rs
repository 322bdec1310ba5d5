//! Deterministic random streams with hierarchical splitting.
//!
//! Every randomized operation takes a [`RandomStream`] rather than a shared
//! generator. Child streams are derived by hashing the parent state with the
//! child index, so a task grid (replication x variable x replicate) can be
//! executed in any order, or in parallel, and still consume identical
//! randomness per task.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// A splittable source of deterministic randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomStream {
    state: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RandomStream {
    pub fn from_seed(seed: u64) -> Self {
        RandomStream {
            state: splitmix64(seed),
        }
    }

    /// Derive the `index`-th child stream. Children of distinct indices, and
    /// children of distinct parents, are statistically independent.
    pub fn child(&self, index: u64) -> Self {
        RandomStream {
            state: splitmix64(self.state ^ splitmix64(index.wrapping_add(1))),
        }
    }

    /// Instantiate the concrete generator for this stream.
    pub fn rng(&self) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(self.state)
    }
}
