#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Straight scalar recomputation of IDSIM from integer counts: a Gaussian
/// numerator and an indicator denominator summed call by call.
pub fn oracle_idsim(a: &[u64], b: &[u64], sigma: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut g = 0.0f64;
    let mut h = 0.0f64;
    for s in 0..a.len() {
        if a[s] == 0 && b[s] == 0 {
            continue;
        }
        let diff = a[s] as f64 - b[s] as f64;
        g += f64::exp(-(diff / sigma).powi(2));
        h += 1.0;
    }
    if h == 0.0 {
        1.0
    } else {
        0.5 + 0.5 * (g / h)
    }
}

/// `pairs` random count-vector pairs with counts in `[0, 10]` and dims in `[1, 64]`.
pub fn random_pairs(pairs: usize, seed: u64) -> Vec<(Vec<u64>, Vec<u64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..pairs)
        .map(|_| {
            let dims = rng.random_range(1..=64);
            let mut draw = || -> Vec<u64> {
                (0..dims)
                    .map(|_| if rng.random_bool(0.3) { 0 } else { rng.random_range(0..=10) })
                    .collect()
            };
            let a = draw();
            let b = draw();
            (a, b)
        })
        .collect()
}

pub fn as_f64(v: &[u64]) -> Vec<f64> {
    v.iter().map(|&c| c as f64).collect()
}
