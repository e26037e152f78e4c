//! Seed derivation. Every sample owns an independent ChaCha stream keyed by a
//! 64-bit seed derived from `(base_seed, sample_index)`, so results do not
//! depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Recorded in run metadata so outputs can be reproduced.
pub const PRNG_ALGORITHM: &str = "chacha12/splitmix64-v1";

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-sample seed.
pub fn sample_seed(base_seed: u64, sample_index: u64) -> u64 {
    mix(mix(base_seed).wrapping_add(sample_index.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

/// Generator for one logical stream (e.g. perturbation draw, fBm component) of a sample.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
