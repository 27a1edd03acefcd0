//! Deterministic stream derivation.
//!
//! Every random draw in the crate comes from a ChaCha8 stream whose 64-bit
//! seed is derived by the SplitMix64 finalizer below. The derivation is
//! bit-exact and documented here so runs are reproducible across platforms
//! and thread counts:
//!
//! - `mix64` is the SplitMix64 avalanche: `x ^= x >> 30; x *= 0xbf58476d1ce4e5b9;
//!   x ^= x >> 27; x *= 0x94d049bb133111eb; x ^= x >> 31`.
//! - matrix entry `(i, j)` uses `mix64(mix64(mix64(seed ^ PHI) ^ i) ^ j)`;
//! - Monte Carlo trial `t` uses `mix64(mix64(seed ^ PHI) ^ t)`.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 2^64 / golden ratio; decorrelates the raw user seed before chaining.
pub const PHI: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^= x >> 31;
    x
}

/// Stream seed for matrix entry `(i, j)`.
#[inline]
pub fn entry_seed(seed: u64, i: usize, j: usize) -> u64 {
    mix64(mix64(mix64(seed ^ PHI) ^ i as u64) ^ j as u64)
}

/// Stream seed for Monte Carlo trial `t`.
#[inline]
pub fn trial_seed(seed: u64, t: u64) -> u64 {
    mix64(mix64(seed ^ PHI) ^ t)
}

/// RNG for a derived stream seed.
#[inline]
pub fn stream_rng(stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix_is_bijective_on_probes() {
        // distinct inputs map to distinct outputs on a small probe set
        let mut seen = std::collections::HashSet::new();
        for x in 0..10_000u64 {
            assert!(seen.insert(mix64(x)));
        }
    }

    #[test]
    fn entry_seeds_distinct_and_asymmetric() {
        assert_ne!(entry_seed(1, 2, 3), entry_seed(1, 3, 2));
        assert_ne!(entry_seed(1, 0, 1), entry_seed(2, 0, 1));
    }
}
