//! Seeded random streams.
//!
//! Every stochastic routine takes a 64-bit seed. Independent purposes that
//! share a seed draw from distinct ChaCha streams so they never alias.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64, purpose: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng
}

/// Stream tags used across the crate.
pub mod purpose {
    pub const GENERATE: u64 = 1;
    pub const SHUFFLE: u64 = 2;
    pub const SPLIT: u64 = 3;
    pub const INIT: u64 = 4;
    pub const FOLDS: u64 = 5;
    pub const SMO: u64 = 6;
    pub const EM: u64 = 7;
    pub const SESSION: u64 = 8;
}
