//! Seeded random streams.
//!
//! Every stochastic component takes an explicit seed. Independent purposes
//! (initialisation, selection, variation, ...) draw from separate ChaCha
//! streams of the same seed so that adding draws in one place never shifts
//! the sequence seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Named stream ids.
pub mod stream {
    pub const INIT: u64 = 1;
    pub const SELECTION: u64 = 2;
    pub const VARIATION: u64 = 3;
    pub const MIXUP: u64 = 4;
    pub const SPLIT: u64 = 5;
    pub const MODEL: u64 = 6;
    pub const MONTE_CARLO: u64 = 7;
}

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
