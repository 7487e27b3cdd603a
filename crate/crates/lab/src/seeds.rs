//! Per-run seed derivation.
//!
//! A run's seed depends only on the master seed, a stream label naming the
//! experiment series, the grid cell and the run number:
//!
//! ```text
//! h    = fnv1a64(label)
//! seed = mix(mix(mix(master ^ h) ^ cell) ^ run)
//! ```
//!
//! where `mix` is the SplitMix64 finaliser applied to `x + 0x9E3779B97F4A7C15`.
//! Runs never share an RNG, so their order of execution cannot change
//! results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01B3)
    })
}

pub fn derive(master: u64, label: &str, cell: u64, run: u64) -> u64 {
    mix(mix(mix(master ^ fnv1a(label)) ^ cell) ^ run)
}

pub fn rng(master: u64, label: &str, cell: u64, run: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, label, cell, run))
}
