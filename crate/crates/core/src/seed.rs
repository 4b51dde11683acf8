//! Deterministic seed streams.
//!
//! Every random draw in the crate flows from an explicit `u64` seed. Child
//! seeds are derived by hashing the parent with a list of integer labels so
//! that independent consumers (permutation tests, edges, generations, runs)
//! never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Rng = ChaCha8Rng;

/// Builds a generator from a seed.
pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `parent` and a path of labels.
pub fn derive(parent: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(splitmix64(parent), |acc, &l| splitmix64(acc ^ splitmix64(l)))
}
