//! Seeded random sources.
//!
//! Every stochastic operation takes an explicit `&mut R where R: Rng`.
//! Independent streams are split off by hashing a master seed together with
//! coordinates (grid cell, trial index, repeat index) through
//! [`derive_seed`]; the hash is fixed and part of the reproducibility
//! contract, so changing it changes every report.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random source used by the simulator.
pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
const fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `master` and a sequence of 64-bit words.
///
/// `h0 = mix(master + G)`, then `h = mix(h ^ word + G)` for every word,
/// then one final `mix(h ^ len)`. `G` is the 64-bit golden ratio constant.
/// Floats enter as their IEEE bit patterns (`f64::to_bits`).
pub fn derive_seed(master: u64, words: &[u64]) -> u64 {
    const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut h = mix64(master.wrapping_add(GOLDEN));
    for &w in words {
        h = mix64((h ^ w).wrapping_add(GOLDEN));
    }
    mix64(h ^ words.len() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derive_seed_is_stable() {
        // frozen: a change here silently changes every published report
        assert_eq!(derive_seed(42, &[1, 2]), 0x4ce5_3d4e_4efe_44ab);
        assert_eq!(derive_seed(0, &[]), 0x4821_8226_ff3c_d4bf);
        assert_ne!(derive_seed(1, &[0]), derive_seed(1, &[1]));
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
        assert_ne!(derive_seed(1, &[]), derive_seed(1, &[0]));
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = seeded(7);
        let mut b = seeded(7);
        for _ in 0..16 {
            assert_eq!(a.random::<u64>(), b.random::<u64>());
        }
    }
}
