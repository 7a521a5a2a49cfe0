use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use super::rns::{RnsBasis, RnsPoly};

/// Uniform residues expanded from `(seed, stream)`.
pub fn uniform_from_seed(basis: &RnsBasis, n: usize, seed: &[u8; 32], stream: u64) -> RnsPoly {
    let mut rng = ChaCha20Rng::from_seed(*seed);
    rng.set_stream(stream);
    let mut p = RnsPoly::zero(n, basis.len());
    for (i, m) in basis.moduli().iter().enumerate() {
        for x in p.limb_mut(i) {
            *x = rng.random_range(0..m.value());
        }
    }
    p
}

pub fn ternary<R: Rng>(rng: &mut R, n: usize) -> Vec<i64> {
    (0..n).map(|_| rng.random_range(-1i64..=1)).collect()
}

/// Rounded Gaussian with tails cut at six standard deviations.
pub fn gaussian<R: Rng>(rng: &mut R, n: usize, sigma: f64) -> Vec<i64> {
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    let bound = (6.0 * sigma).ceil();
    (0..n)
        .map(|_| loop {
            let x: f64 = normal.sample(rng).round();
            if x.abs() <= bound {
                break x as i64;
            }
        })
        .collect()
}

pub fn signed_to_rns(coeffs: &[i64], basis: &RnsBasis) -> RnsPoly {
    let n = coeffs.len();
    let mut p = RnsPoly::zero(n, basis.len());
    for (i, m) in basis.moduli().iter().enumerate() {
        for (x, &c) in p.limb_mut(i).iter_mut().zip(coeffs) {
            *x = m.from_i64(c);
        }
    }
    p
}
