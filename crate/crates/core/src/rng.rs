//! Seed derivation shared by every stochastic stage.
//!
//! All randomness flows from a single `u64` seed. Sub-streams are keyed by
//! a path of integers (stage tag, node index, walk index, ...) so that work
//! split across threads draws exactly the numbers the serial schedule would.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StageRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `path` into `seed`, producing an independent child seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_for(seed: u64, path: &[u64]) -> StageRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}
