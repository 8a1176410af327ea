//! Seeded random streams.
//!
//! Every stochastic step (shuffling, fold assignment, pair selection, random
//! weights, network initialization) draws from its own `ChaCha8Rng` so runs
//! are reproducible from the recorded seeds alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default seeds used when the caller does not supply any.
pub const DEFAULT_SHUFFLE_SEED: u64 = 1;
pub const DEFAULT_FOLD_SEED: u64 = 2;
pub const DEFAULT_SOLVER_SEED: u64 = 3;
pub const DEFAULT_WEIGHT_SEED: u64 = 4;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a sequence of 64-bit keys.
pub fn derive_seed(master: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(mix(master), |acc, &k| mix(acc ^ mix(k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn seeded_rng_is_deterministic() {
        let a: Vec<u64> = (0..4)
            .map({
                let mut r = seeded_rng(42);
                move |_| r.gen()
            })
            .collect();
        let b: Vec<u64> = (0..4)
            .map({
                let mut r = seeded_rng(42);
                move |_| r.gen()
            })
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn derived_seeds_depend_on_every_key() {
        let base = derive_seed(7, &[1, 2]);
        assert_eq!(base, derive_seed(7, &[1, 2]));
        assert_ne!(base, derive_seed(8, &[1, 2]));
        assert_ne!(base, derive_seed(7, &[2, 1]));
        assert_ne!(base, derive_seed(7, &[1, 2, 0]));
    }
}
