//! Seeded random streams.
//!
//! Every generator draws from a `ChaCha8Rng` seeded with a 64-bit value.
//! Independent substreams (one per replication) use
//! `seed' = splitmix64(seed + 0x9E3779B97F4A7C15 * (index + 1))`, so any
//! work unit can be reproduced without replaying the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type DgpRng = ChaCha8Rng;

pub const RNG_ALGORITHM: &str = "chacha8";

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of substream `index` derived from `seed`.
pub fn substream_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(index.wrapping_add(1))))
}

pub fn rng_from_seed(seed: u64) -> DgpRng {
    ChaCha8Rng::seed_from_u64(seed)
}
