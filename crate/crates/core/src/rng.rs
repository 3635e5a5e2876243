//! Seeding conventions.
//!
//! Every random stream in the crate is a ChaCha8 generator keyed by
//! `seed_from_u64(seed)` with an explicit stream id, so independent consumers
//! never share a sequence. Child seeds are derived with [`derive_seed`], a
//! SplitMix64 finalizer chained over the key components; the derivation is
//! independent of evaluation order, which keeps parallel sweeps reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids for the consumers that share one seed.
pub mod streams {
    pub const MATRIX: u64 = 0;
    pub const PROBES: u64 = 0x5052_4f42;
    pub const DICTIONARY: u64 = 0x4449_4354;
    pub const INIT: u64 = 0x494e_4954;
    pub const GA: u64 = 0x4741_0000;
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// `derive_seed(s, [a, b, ...]) = mix(...mix(mix(s) ^ a) ^ b ...)`.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(seed), |acc, p| splitmix64(acc ^ *p))
}
