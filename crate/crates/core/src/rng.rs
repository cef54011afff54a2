//! Counter-based seed derivation.
//!
//! Every random stream in the crate is keyed by `(seed, counter...)` rather
//! than drawn from a shared generator, so results do not depend on how work is
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a counter.
pub fn derive(seed: u64, counter: u64) -> u64 {
    mix64(mix64(seed) ^ counter.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Derives a child seed from a parent seed and a path of counters.
pub fn derive_path(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(seed, |s, &c| derive(s, c))
}

pub fn stream(seed: u64, counter: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive(seed, counter))
}
