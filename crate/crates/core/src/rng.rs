//! Random streams.
//!
//! Every stochastic component draws from [`SimRng`], ChaCha with 8 rounds
//! (`rand_chacha::ChaCha8Rng`). The generator is counter based and its output
//! is fixed by the seed alone, so trajectories replay bit-for-bit on any
//! platform.
//!
//! Independent streams are derived from a master seed with [`stream_seed`]:
//!
//! ```text
//! stream_seed(master, tag, index) =
//!     splitmix64(splitmix64(splitmix64(master) ^ tag) ^ index)
//! ```
//!
//! where `splitmix64` is the finalizer of Steele, Lea & Flood's SplitMix64
//! (add the golden-ratio increment, then two xor-shift-multiply rounds).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 output for state `x`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_seed(master: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ tag) ^ index)
}

pub fn stream(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn derived_stream(master: u64, tag: u64, index: u64) -> SimRng {
    stream(stream_seed(master, tag, index))
}
