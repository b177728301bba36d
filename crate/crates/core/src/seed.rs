//! Seed handling.
//!
//! Every random stream in the crate is a [`ChaCha8Rng`] seeded from a
//! single `u64`. Sub-streams are derived with
//!
//! ```text
//! derive_seed(base, index) = splitmix64(splitmix64(base) ^ index)
//! ```
//!
//! where `splitmix64` is the standard finalizer (add the golden-ratio
//! increment `0x9E3779B97F4A7C15`, then two xor-shift-multiply rounds with
//! `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB`). Because the derivation
//! depends only on `(base, index)`, results never depend on how trials are
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Seed = u64;

/// The generator used for all simulation streams.
pub type SimRng = ChaCha8Rng;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sub-stream `index` of `base`.
pub fn derive_seed(base: Seed, index: u64) -> Seed {
    splitmix64(splitmix64(base) ^ index)
}

pub fn rng_from_seed(seed: Seed) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
