//! Seeded random streams. Every random draw in the crate comes from a
//! ChaCha stream keyed by `(master seed, stream id)`, so parallel schedules
//! reproduce the sequential run exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream ids reserved for top-level purposes; per-item streams use
/// `ITEM_BASE + index`.
pub mod streams {
    pub const INSTANCE: u64 = 1;
    pub const PATH: u64 = 2;
    pub const MULTISTART: u64 = 3;
    pub const ODE: u64 = 4;
    pub const ORACLE: u64 = 5;
    pub const ITEM_BASE: u64 = 1 << 32;
}

pub fn substream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derive the seed for retry `attempt` of a run seeded with `seed`.
pub fn resample_seed(seed: u64, attempt: u64) -> u64 {
    if attempt == 0 {
        return seed;
    }
    // splitmix64 finalizer
    let mut z = seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
