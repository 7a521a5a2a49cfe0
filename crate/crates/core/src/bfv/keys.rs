use std::collections::BTreeMap;

use super::params::BfvParams;
use super::rns::RnsPoly;
use super::sample::{gaussian, signed_to_rns, uniform_from_seed};
use rand::Rng;

/// Ternary secret with its NTT image over the ciphertext primes.
#[derive(Clone)]
pub struct SecretKey {
    pub(crate) coeffs: Vec<i64>,
    pub(crate) ntt: RnsPoly,
}

impl std::fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

impl SecretKey {
    pub fn from_coeffs(params: &BfvParams, coeffs: Vec<i64>) -> Self {
        assert!(coeffs.len() == params.degree() && coeffs.iter().all(|c| (-1..=1).contains(c)));
        let mut ntt = signed_to_rns(&coeffs, &params.0.q);
        ntt.forward(&params.0.q);
        SecretKey { coeffs, ntt }
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }
}

/// Encryptions of `s' * (Q/q_i) * 2^(w j)` under `s`, one per digit, in NTT form.
/// The uniform halves are expanded from `seed`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeySwitchKey {
    pub(crate) seed: [u8; 32],
    pub(crate) b: Vec<RnsPoly>,
    pub(crate) a: Vec<RnsPoly>,
}

impl KeySwitchKey {
    pub(crate) fn generate<R: Rng>(
        params: &BfvParams,
        sk: &SecretKey,
        target_ntt: &RnsPoly,
        rng: &mut R,
    ) -> Self {
        let p = &params.0;
        let seed: [u8; 32] = rng.random();
        let a = Self::expand_a(params, &seed);
        let mut b = Vec::with_capacity(a.len());
        let mut d = 0;
        for (i, &count) in p.digits.iter().enumerate() {
            let mi = p.q.modulus(i);
            for j in 0..count {
                let mut e = signed_to_rns(&gaussian(rng, p.n, p.sigma), &p.q);
                e.forward(&p.q);
                let mut bd = a[d].clone();
                bd.mul_assign(&sk.ntt, &p.q);
                bd.neg_assign(&p.q);
                bd.add_assign(&e, &p.q);
                let g = mi.mul(p.q_hat[i], mi.reduce(1u64 << (p.w as usize * j)));
                let g = mi.shoup(g);
                for (x, &s) in bd.limb_mut(i).iter_mut().zip(target_ntt.limb(i)) {
                    *x = mi.add(*x, mi.mul_shoup(s, g));
                }
                b.push(bd);
                d += 1;
            }
        }
        KeySwitchKey { seed, b, a }
    }

    pub(crate) fn expand_a(params: &BfvParams, seed: &[u8; 32]) -> Vec<RnsPoly> {
        let p = &params.0;
        let total: usize = p.digits.iter().sum();
        (0..total)
            .map(|d| uniform_from_seed(&p.q, p.n, seed, d as u64))
            .collect()
    }

    pub(crate) fn from_parts(params: &BfvParams, seed: [u8; 32], b: Vec<RnsPoly>) -> Self {
        let a = Self::expand_a(params, &seed);
        KeySwitchKey { seed, b, a }
    }

    pub fn digit_count(&self) -> usize {
        self.b.len()
    }

    /// Returns `(k0, k1)` in coefficient form with `k0 + k1 s ~ c s'`.
    pub(crate) fn switch(&self, params: &BfvParams, c: &RnsPoly) -> (RnsPoly, RnsPoly) {
        let p = &params.0;
        let (n, l) = (p.n, p.q.len());
        let mut acc0 = RnsPoly::zero(n, l);
        let mut acc1 = RnsPoly::zero(n, l);
        let mut digit = RnsPoly::zero(n, l);
        let mut y = vec![0u64; n];
        let mask = if p.w >= 64 {
            u64::MAX
        } else {
            (1u64 << p.w) - 1
        };
        let mut d = 0;
        for i in 0..l {
            let mi = p.q.modulus(i);
            for (yj, &cj) in y.iter_mut().zip(c.limb(i)) {
                *yj = mi.mul_shoup(cj, p.q_hat_inv[i]);
            }
            for j in 0..p.digits[i] {
                let shift = p.w as usize * j;
                for t in 0..l {
                    let mt = p.q.modulus(t);
                    let dst = digit.limb_mut(t);
                    for (o, &yv) in dst.iter_mut().zip(&y) {
                        *o = mt.reduce((yv >> shift) & mask);
                    }
                    p.q.ntt(t).forward(dst);
                }
                acc0.fma_assign(&digit, &self.b[d], &p.q);
                acc1.fma_assign(&digit, &self.a[d], &p.q);
                d += 1;
            }
        }
        acc0.inverse(&p.q);
        acc1.inverse(&p.q);
        (acc0, acc1)
    }
}

/// Relinearization key plus Galois keys indexed by their element.
#[derive(Clone, Debug)]
pub struct EvalKeySet {
    pub(crate) params: BfvParams,
    pub(crate) relin: Option<KeySwitchKey>,
    pub(crate) galois: BTreeMap<usize, KeySwitchKey>,
}

impl EvalKeySet {
    pub fn params(&self) -> &BfvParams {
        &self.params
    }

    pub fn has_relin(&self) -> bool {
        self.relin.is_some()
    }

    pub fn galois_elements(&self) -> Vec<usize> {
        self.galois.keys().copied().collect()
    }

    pub fn has_galois(&self, g: usize) -> bool {
        self.galois.contains_key(&g)
    }
}
