//! Seed handling. Every stochastic routine takes a `u64` seed and builds a
//! ChaCha8 stream from it; parallel trials derive their seeds from a master
//! seed with a splitmix64 step so each trial can be regenerated on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One splitmix64 output for state `x`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master`: `splitmix64(master + (index+1)·φ)`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// Seed for a named sub-stream of a trial (design, beta, noise, ...).
pub fn substream(seed: u64, stream: u64) -> u64 {
    derive_seed(seed ^ 0xD1B5_4A32_D192_ED03, stream)
}

/// A fresh seed for runs that did not specify one.
pub fn fresh_seed() -> u64 {
    rand::random()
}
