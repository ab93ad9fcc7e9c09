//! Seed handling.
//!
//! Every random stream is a ChaCha8 generator keyed by the 64-bit master
//! seed and selected by a 64-bit stream id (`set_stream`). Streams with
//! distinct ids are independent, so work can be split across threads
//! without changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream ids reserved by the library.
pub mod streams {
    pub const GENERATOR: u64 = 0;
    pub const GAUGE: u64 = 1;
    pub const PT_INIT: u64 = 2;
    pub const PT_SWAP: u64 = 3;
    /// Rung `i` sweeps with stream `PT_RUNG_BASE + i`.
    pub const PT_RUNG_BASE: u64 = 1 << 32;
}

pub fn stream_rng(master_seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer, used to derive child seeds (e.g. one per instance).
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
