//! Counter-based randomness. Every random decision is a pure function of a
//! 64-bit key and a counter, so parallel and serial runs agree exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives an independent sub-key from `(key, index)`.
#[inline]
pub fn derive(key: u64, index: u64) -> u64 {
    splitmix64(key ^ splitmix64(index.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
#[inline]
pub fn unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A seeded stream generator for code that needs an ordinary `Rng`.
pub fn stream(key: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(key, index))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_is_in_range() {
        assert_eq!(unit(0), 0.0);
        assert!(unit(u64::MAX) < 1.0);
    }

    #[test]
    fn derive_separates_indices() {
        assert_ne!(derive(7, 0), derive(7, 1));
        assert_ne!(derive(7, 0), derive(8, 0));
        assert_eq!(derive(7, 3), derive(7, 3));
    }
}
