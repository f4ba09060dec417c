//! Seeded random streams.
//!
//! All randomness flows from an explicit `u64` seed through ChaCha8. Derived
//! streams (per tree, per member, per synthetic sample) are obtained by
//! mixing the parent seed with a stream index, so work can be distributed
//! across threads without changing the draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer over `(seed, stream)`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derived_rng(seed: u64, stream: u64) -> Rng {
    rng_from_seed(derive_seed(seed, stream))
}

/// Counter-based stream: same key, one ChaCha stream per `counter`.
pub fn counter_rng(seed: u64, counter: u64) -> Rng {
    let mut rng = rng_from_seed(seed);
    rng.set_stream(counter);
    rng
}
