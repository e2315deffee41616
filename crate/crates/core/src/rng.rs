//! Seeded random streams.
//!
//! Every stochastic routine takes its randomness from a `ChaCha8Rng`. Independent
//! runs derive their generators from `(master seed, run index)` through the
//! ChaCha stream counter, so a run's draws never depend on how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream id reserved for mini-batch index draws.
pub const INDEX_STREAM: u64 = 0;
/// Stream id reserved for diversity-inducing mechanism draws.
pub const MECHANISM_STREAM: u64 = 1;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for stream `stream` under `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed for the `index`-th independent run of an experiment seeded by `master`.
///
/// SplitMix64 finalizer; distinct indices give well-separated seeds.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
