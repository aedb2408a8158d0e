//! Seed derivation for independent, reproducible random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a path of tags into a child seed. Distinct tag
/// paths give statistically independent streams.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(master), |acc, &t| splitmix64(acc ^ splitmix64(t.wrapping_add(0x632B_E59B_D9B4_E019))))
}

pub fn stream(master: u64, tags: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, tags))
}

/// Stream tags used across the crate, kept in one place so that no two
/// consumers accidentally share a stream.
pub mod tag {
    pub const ENGINE: u64 = 1;
    pub const STRATEGY: u64 = 2;
    pub const VALUES: u64 = 3;
    pub const BUDGETS: u64 = 4;
    pub const ANCHORS: u64 = 5;
    pub const MOMENTS: u64 = 6;
    pub const PREDICTION: u64 = 7;
    pub const SEARCH: u64 = 8;
    pub const CHANCE: u64 = 9;
    pub const PROFILES: u64 = 10;
    pub const TREE: u64 = 11;
    pub const INSTANCE: u64 = 12;
    pub const TRUE_TYPE: u64 = 13;
    pub const ROLLOUT: u64 = 14;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derived_streams_are_reproducible_and_distinct() {
        let a: u64 = stream(7, &[1, 2]).gen();
        let b: u64 = stream(7, &[1, 2]).gen();
        let c: u64 = stream(7, &[2, 1]).gen();
        let d: u64 = stream(8, &[1, 2]).gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
        assert_ne!(derive_seed(0, &[]), derive_seed(0, &[0]));
    }
}
