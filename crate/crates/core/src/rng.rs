//! Seed derivation and reproducible random streams.
//!
//! Every random draw in the pipeline comes from a `ChaCha12Rng` seeded by
//! mixing a base seed with a stream tag, so distinct stages, episodes, and
//! frames get independent, individually re-derivable streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// splitmix64 finalizer; good avalanche behavior for seed mixing.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a base seed and a sequence of tag words.
///
/// The same (base, tags) always yields the same child; distinct tags yield
/// uncorrelated children.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut acc = mix(base ^ 0x6a09_e667_f3bc_c908);
    for &t in tags {
        acc = mix(acc ^ mix(t));
    }
    acc
}

/// Stable 64-bit tag for a string label (FNV-1a).
pub fn tag(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// ChaCha12 stream for a derived seed.
pub fn rng_from(base: u64, tags: &[u64]) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(base, tags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        let a = derive_seed(42, &[tag("episode"), 7]);
        let b = derive_seed(42, &[tag("episode"), 7]);
        let c = derive_seed(42, &[tag("episode"), 8]);
        let d = derive_seed(43, &[tag("episode"), 7]);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn streams_reproduce() {
        let mut r1 = rng_from(1, &[tag("noise"), 0, 3]);
        let mut r2 = rng_from(1, &[tag("noise"), 0, 3]);
        let xs: Vec<u64> = (0..16).map(|_| r1.gen()).collect();
        let ys: Vec<u64> = (0..16).map(|_| r2.gen()).collect();
        assert_eq!(xs, ys);
    }
}
