//! Seed derivation helpers.
//!
//! Every random stream in a run is derived from the scenario seed plus a
//! stream label, so adding a consumer never perturbs the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one well-mixed hash.
pub fn hash_words(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x5851_f42d_4c95_7f2d, |acc, &w| mix64(acc ^ mix64(w)))
}

/// Maps a hash to a uniform value in `[0, 1)`.
pub fn unit_interval(hash: u64) -> f64 {
    (hash >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub mod stream {
    pub const MOBILITY: u64 = 1;
    pub const TRAFFIC: u64 = 2;
    pub const CHANNEL: u64 = 3;
}

pub fn stream_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(hash_words(&[seed, stream, index]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval_bounds() {
        assert_eq!(unit_interval(0), 0.0);
        assert!(unit_interval(u64::MAX) < 1.0);
    }

    #[test]
    fn streams_differ() {
        assert_ne!(hash_words(&[1, 2, 3]), hash_words(&[1, 3, 2]));
        assert_eq!(hash_words(&[7, 7]), hash_words(&[7, 7]));
    }
}
