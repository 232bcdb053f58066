//! Deterministic seed derivation.
//!
//! Every random quantity in the crate flows through a ChaCha stream seeded
//! from an explicit `u64`. Sub-streams (per trial, per iteration, per circuit
//! evaluation) are derived with a SplitMix64 chain so that results are
//! independent of evaluation order and of the thread schedule.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer. Fixed constants, stable across platforms and builds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and an ordered list of tags.
pub fn mix(seed: u64, tags: &[u64]) -> u64 {
    let mut z = splitmix64(seed);
    for &t in tags {
        z = splitmix64(z ^ splitmix64(t));
    }
    z
}

/// Stable FNV-1a hash for string tags (experiment names and the like).
pub fn hash_str(s: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// The RNG used throughout the crate.
pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
