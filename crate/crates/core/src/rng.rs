//! Deterministic random streams.
//!
//! Every stochastic component receives its own [`Stream`], derived from a
//! master seed and a path of integers (tag, trial, iteration, copy, ...).
//! Derivation folds each path element through the SplitMix64 finalizer, so
//! `derive_seed(m, &[a, b])` is a fixed function of `(m, a, b)` that does not
//! depend on thread scheduling or evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random stream type used throughout the crate.
pub type Stream = ChaCha8Rng;

pub const TAG_TRIAL: u64 = 0x7472_6961_6c00_0001;
pub const TAG_TASK: u64 = 0x7461_736b_0000_0002;
pub const TAG_PERTURB: u64 = 0x7065_7274_0000_0003;
pub const TAG_COPY: u64 = 0x636f_7079_0000_0004;
pub const TAG_INIT: u64 = 0x696e_6974_0000_0005;
pub const TAG_PROBE: u64 = 0x7072_6f62_0000_0006;

/// SplitMix64 output function (Steele, Lea & Flood constants).
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc.rotate_left(23) ^ splitmix64(p)))
}

pub fn stream(master: u64, path: &[u64]) -> Stream {
    Stream::seed_from_u64(derive_seed(master, path))
}

pub fn seeded(seed: u64) -> Stream {
    Stream::seed_from_u64(seed)
}
