//! Seeded random streams. Every consumer derives its own stream from
//! `(seed, domain, a, b)` so adding a parameter or a dropout site never
//! shifts the draws seen by another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::Tensor;

pub const DOMAIN_INIT: u64 = 1;
pub const DOMAIN_DROPOUT: u64 = 2;
pub const DOMAIN_SPLIT: u64 = 3;
pub const DOMAIN_SYNTH: u64 = 4;
pub const DOMAIN_FIXTURE: u64 = 5;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, domain: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut h = splitmix(seed);
    for part in [domain, a, b] {
        h = splitmix(h ^ part);
    }
    ChaCha8Rng::seed_from_u64(h)
}

/// Inverted-dropout mask: entries are `0` with probability `p`, else
/// `1 / (1 - p)`.
pub fn dropout_mask(rows: usize, cols: usize, p: f64, rng: &mut impl Rng) -> Tensor {
    let keep = 1.0 - p;
    let mut m = Tensor::zeros(rows, cols);
    for v in m.data_mut() {
        if rng.random::<f64>() < keep {
            *v = 1.0 / keep;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream(7, DOMAIN_INIT, 1, 0).random();
        let b: u64 = stream(7, DOMAIN_INIT, 1, 0).random();
        let c: u64 = stream(7, DOMAIN_INIT, 2, 0).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn dropout_mask_values() {
        let m = dropout_mask(50, 20, 0.5, &mut stream(1, DOMAIN_DROPOUT, 0, 0));
        assert!(m.data().iter().all(|&v| v == 0.0 || v == 2.0));
        let kept = m.data().iter().filter(|&&v| v > 0.0).count();
        assert!((400..600).contains(&kept));
    }
}
