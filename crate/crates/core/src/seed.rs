//! Seeding conventions.
//!
//! Every random draw in the crate comes from [`rand_chacha::ChaCha8Rng`]
//! constructed with `SeedableRng::seed_from_u64`. Graph `k` of a collection
//! generated from `base_seed` uses `base_seed ^ k`. Monte Carlo replicates
//! derive their seed from `(base_seed, K, replicate)` through SplitMix64 so
//! that adding replicates never perturbs earlier ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finaliser.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn graph_seed(base_seed: u64, index: usize) -> u64 {
    base_seed ^ index as u64
}

pub fn replicate_seed(base_seed: u64, k: usize, replicate: usize) -> u64 {
    mix64(base_seed ^ mix64(((k as u64) << 32) | replicate as u64))
}
