use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::ciphertext::BfvCiphertext;
use super::keys::{EvalKeySet, KeySwitchKey, SecretKey};
use super::params::BfvParams;
use super::rns::RnsPoly;
use super::sample::{gaussian, signed_to_rns, ternary, uniform_from_seed};
use crate::error::HeError;
use crate::he::HeClient;
use crate::ring::RingElement;

/// Holder of the secret key: encrypts, decrypts and produces evaluation keys.
pub struct BfvClient {
    params: BfvParams,
    sk: SecretKey,
    rng: Mutex<ChaCha20Rng>,
}

impl std::fmt::Debug for BfvClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BfvClient(N={})", self.params.degree())
    }
}

/// Secret key and evaluation keys for `galois_elements`, all derived from `seed`.
pub fn keygen(
    params: &BfvParams,
    galois_elements: &[usize],
    seed: [u8; 32],
) -> (BfvClient, EvalKeySet) {
    let client = BfvClient::new(params, seed);
    let keys = client.eval_keys(galois_elements);
    (client, keys)
}

impl BfvClient {
    pub fn new(params: &BfvParams, seed: [u8; 32]) -> Self {
        let mut rng = ChaCha20Rng::from_seed(seed);
        let sk = SecretKey::from_coeffs(params, ternary(&mut rng, params.degree()));
        BfvClient {
            params: params.clone(),
            sk,
            rng: Mutex::new(rng),
        }
    }

    pub fn params(&self) -> &BfvParams {
        &self.params
    }

    pub fn secret_key(&self) -> &SecretKey {
        &self.sk
    }

    /// Relinearization key and one Galois key per element.
    pub fn eval_keys(&self, galois_elements: &[usize]) -> EvalKeySet {
        let p = &self.params.0;
        let mut rng = self.rng.lock().unwrap();
        let mut s2 = self.sk.ntt.clone();
        s2.mul_assign(&self.sk.ntt, &p.q);
        let relin = KeySwitchKey::generate(&self.params, &self.sk, &s2, &mut *rng);
        let mut galois = std::collections::BTreeMap::new();
        for &g in galois_elements {
            let g = g % (2 * p.n);
            assert!(g % 2 == 1, "Galois elements are odd");
            let mut target =
                automorphism_rns(&signed_to_rns(&self.sk.coeffs, &p.q), g, &self.params);
            target.forward(&p.q);
            galois.insert(
                g,
                KeySwitchKey::generate(&self.params, &self.sk, &target, &mut *rng),
            );
        }
        EvalKeySet {
            params: self.params.clone(),
            relin: Some(relin),
            galois,
        }
    }

    /// `c0 + c1 s` over `Q`, coefficient form.
    fn phase(&self, ct: &BfvCiphertext) -> RnsPoly {
        let q = &self.params.0.q;
        let mut x = ct.c[1].clone();
        x.forward(q);
        x.mul_assign(&self.sk.ntt, q);
        x.inverse(q);
        x.add_assign(&ct.c[0], q);
        x
    }

    fn check(&self, ct: &BfvCiphertext) -> Result<(), HeError> {
        if ct.params != self.params {
            return Err(HeError::ParamMismatch);
        }
        Ok(())
    }

    /// Remaining noise headroom in bits; 0 means decryption is not trustworthy.
    pub fn noise_budget(&self, ct: &BfvCiphertext) -> Result<u32, HeError> {
        self.check(ct)?;
        let p = &self.params.0;
        let (n, l) = (p.n, p.q.len());
        let x = self.phase(ct);
        let mut res = vec![0u64; l];
        let mut v = vec![0u64; l];
        let mut worst = f64::NEG_INFINITY;
        for j in 0..n {
            for (i, r) in res.iter_mut().enumerate() {
                *r = p.q.modulus(i).mul_shoup(x.limb(i)[j], p.t_mod_q[i]);
            }
            p.q.mixed_radix(&res, &mut v);
            if p.q.is_upper_half(&v) {
                for (i, r) in res.iter_mut().enumerate() {
                    *r = p.q.modulus(i).neg(*r);
                }
                p.q.mixed_radix(&res, &mut v);
            }
            worst = worst.max(p.q.log2_of_digits(&v));
        }
        let log2_q = p.he.log2_q();
        let budget = if worst == f64::NEG_INFINITY {
            log2_q - 1.0
        } else {
            log2_q - worst - 1.0
        };
        Ok(budget.max(0.0).floor() as u32)
    }

    /// Fresh encryption that keeps the seed of its uniform component.
    pub fn encrypt_seeded(&self, m: &RingElement) -> Result<BfvCiphertext, HeError> {
        let p = &self.params.0;
        p.he.check_plain(m)?;
        let (seed, e) = {
            let mut rng = self.rng.lock().unwrap();
            let seed: [u8; 32] = rng.random();
            (seed, gaussian(&mut *rng, p.n, p.sigma))
        };
        let a = uniform_from_seed(&p.q, p.n, &seed, 0);
        let mut c0 = a.clone();
        c0.forward(&p.q);
        c0.mul_assign(&self.sk.ntt, &p.q);
        c0.inverse(&p.q);
        c0.neg_assign(&p.q);
        c0.add_assign(&signed_to_rns(&e, &p.q), &p.q);
        add_scaled_plain(&mut c0, m, &self.params);
        let mut ct = BfvCiphertext::new(&self.params, [c0, a], 0);
        ct.seed = Some(seed);
        Ok(ct)
    }
}

impl HeClient for BfvClient {
    type Ct = BfvCiphertext;

    fn encrypt(&self, m: &RingElement) -> Result<BfvCiphertext, HeError> {
        self.encrypt_seeded(m)
    }

    fn decrypt(&self, ct: &BfvCiphertext) -> Result<RingElement, HeError> {
        self.check(ct)?;
        let p = &self.params.0;
        let (n, l) = (p.n, p.q.len());
        let x = self.phase(ct);
        let t = p.t.value() as u128;
        let mut res = vec![0u64; l];
        let mut v = vec![0u64; l];
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            for (i, r) in res.iter_mut().enumerate() {
                *r = x.limb(i)[j];
            }
            p.q.mixed_radix(&res, &mut v);
            let top = top_digits(&v, &self.params);
            out.push(((t * top + p.top_den / 2) / p.top_den % t) as u64);
        }
        Ok(RingElement::from_coeffs(p.he.plain_ring(), out)?)
    }
}

/// The two most significant mixed-radix digits over `Q` as one integer.
#[inline]
pub(crate) fn top_digits(v: &[u64], params: &BfvParams) -> u128 {
    let p = &params.0;
    let l = p.q.len();
    if l == 1 {
        v[0] as u128
    } else {
        v[l - 1] as u128 * p.q.modulus(l - 2).value() as u128 + v[l - 2] as u128
    }
}

/// `c0 += floor(Q/t) * m`.
pub(crate) fn add_scaled_plain(c0: &mut RnsPoly, m: &RingElement, params: &BfvParams) {
    let p = &params.0;
    for (i, mi) in p.q.moduli().iter().enumerate() {
        let d = p.delta[i];
        for (x, &mj) in c0.limb_mut(i).iter_mut().zip(m.coeffs()) {
            *x = mi.add(*x, mi.mul_shoup(mj, d));
        }
    }
}

/// Applies `x -> x^g` to every limb.
pub(crate) fn automorphism_rns(a: &RnsPoly, g: usize, params: &BfvParams) -> RnsPoly {
    let p = &params.0;
    let mut out = RnsPoly::zero(p.n, a.limbs());
    for (i, m) in p.q.moduli().iter().enumerate().take(a.limbs()) {
        crate::ring::automorphism_into(a.limb(i), g, m, out.limb_mut(i));
    }
    out
}
