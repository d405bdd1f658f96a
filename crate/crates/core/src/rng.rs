//! Seed derivation for reproducible, schedule-independent random streams.
//!
//! Every trial and every sensor inside a trial gets its own ChaCha stream whose
//! seed is a pure function of the master seed and the stream's coordinates, so
//! results never depend on which worker ran what.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random source used throughout the simulator.
pub type SimRng = ChaCha8Rng;

/// Seed used when neither `--seed` nor `CHOWLIU_SEED` is given.
pub const DEFAULT_SEED: u64 = 20_240_601;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a parent seed with a path of stream coordinates.
pub fn derive_seed(parent: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(parent), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn child_rng(parent: u64, path: &[u64]) -> SimRng {
    rng_from_seed(derive_seed(parent, path))
}
