//! Seed derivation. Every random draw in the crate comes from a ChaCha8
//! stream keyed by a derived seed, so results do not depend on thread
//! scheduling or platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a path of tags into an independent child seed.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(base), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

/// A ChaCha8 generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derived_seeds_differ_by_tag() {
        let a = derive_seed(42, &[0, 1]);
        let b = derive_seed(42, &[1, 0]);
        let c = derive_seed(42, &[0, 1]);
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn streams_are_independent_and_reproducible() {
        let x: u64 = stream_rng(7, 0).gen();
        let y: u64 = stream_rng(7, 1).gen();
        let z: u64 = stream_rng(7, 0).gen();
        assert_ne!(x, y);
        assert_eq!(x, z);
    }
}
