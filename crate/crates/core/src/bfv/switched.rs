//! Responses reduced to the first ciphertext prime `q_0`.
//!
//! Dividing by the dropped primes one at a time (rounding each step) maps
//! `c` over `Q` to about `(q_0 / Q) c`. The noise shrinks by the same
//! factor and gains a rounding term of roughly `sqrt(N)`, so any ciphertext
//! with a few bits of budget left still decrypts. The result can only be
//! decrypted and serialized; it is not an input to further evaluation.
//!
//! Wire layout: `"CWCT" | version | params id | flags = 2 | count = 2 |
//! N (u32) | bits | 2N coefficients mod q_0`, each `bits = ceil(log2 q_0)`
//! wide and packed LSB-first with no padding between coefficients.

use super::ciphertext::BfvCiphertext;
use super::client::BfvClient;
use super::params::BfvParams;
use crate::error::HeError;
use crate::ring::RingElement;

const MAGIC: &[u8; 4] = b"CWCT";
const VERSION: u8 = 1;
const FLAG_SWITCHED: u8 = 2;
const HEADER: usize = 13;

/// Two polynomials modulo `q_0`, coefficient form.
#[derive(Clone, Debug, PartialEq)]
pub struct SwitchedCiphertext {
    params: BfvParams,
    c: [Vec<u64>; 2],
}

impl SwitchedCiphertext {
    pub fn params(&self) -> &BfvParams {
        &self.params
    }

    pub fn components(&self) -> &[Vec<u64>; 2] {
        &self.c
    }
}

impl BfvCiphertext {
    /// Drops every ciphertext prime except `q_0`.
    pub fn switch_to_first_prime(&self) -> SwitchedCiphertext {
        let p = &self.params.0;
        let (n, l) = (p.n, p.q.len());
        let c = self.c.clone().map(|mut poly| {
            for k in (1..l).rev() {
                let qk = p.q.modulus(k);
                let half = qk.value() >> 1;
                let top: Vec<u64> = poly.limb(k).iter().map(|&r| qk.add(r, half)).collect();
                for i in 0..k {
                    let qi = p.q.modulus(i);
                    let half_i = qi.reduce(half);
                    let inv = qi.inv(qi.reduce(qk.value())).expect("distinct primes");
                    let limb = poly.limb_mut(i);
                    for (r, &t) in limb.iter_mut().zip(&top) {
                        let d = qi.sub(qi.reduce(t), half_i);
                        *r = qi.mul(qi.sub(*r, d), inv);
                    }
                }
            }
            poly.limb(0)[..n].to_vec()
        });
        SwitchedCiphertext {
            params: self.params.clone(),
            c,
        }
    }
}

impl BfvClient {
    /// `c0 + c1 s mod q_0`.
    fn switched_phase(&self, ct: &SwitchedCiphertext) -> Result<Vec<u64>, HeError> {
        if ct.params != *self.params() {
            return Err(HeError::ParamMismatch);
        }
        let p = &self.params().0;
        let (q0, ntt) = (p.q.modulus(0), p.q.ntt(0));
        let mut x = ct.c[1].clone();
        ntt.forward(&mut x);
        for (a, &s) in x.iter_mut().zip(self.secret_key().ntt.limb(0)) {
            *a = q0.mul(*a, s);
        }
        ntt.inverse(&mut x);
        for (a, &c0) in x.iter_mut().zip(&ct.c[0]) {
            *a = q0.add(*a, c0);
        }
        Ok(x)
    }

    pub fn decrypt_switched(&self, ct: &SwitchedCiphertext) -> Result<RingElement, HeError> {
        let x = self.switched_phase(ct)?;
        let p = &self.params().0;
        let (q0, t) = (p.q.modulus(0).value() as u128, p.t.value() as u128);
        let coeffs = x
            .iter()
            .map(|&v| ((t * v as u128 + q0 / 2) / q0 % t) as u64)
            .collect();
        Ok(RingElement::from_coeffs(p.he.plain_ring(), coeffs)?)
    }

    /// Noise budget relative to `q_0`.
    pub fn noise_budget_switched(&self, ct: &SwitchedCiphertext) -> Result<u32, HeError> {
        let x = self.switched_phase(ct)?;
        let p = &self.params().0;
        let q0 = p.q.modulus(0);
        let worst = x
            .iter()
            .map(|&v| q0.center(q0.mul(v, p.t.value())).unsigned_abs())
            .max()
            .unwrap_or(0);
        let budget = q0.value() as f64 / 2f64.max(2.0 * worst as f64);
        Ok(budget.log2().max(0.0).floor() as u32)
    }
}

fn coeff_bits(params: &BfvParams) -> usize {
    params.0.q.modulus(0).bits() as usize
}

pub fn serialized_switched_len(params: &BfvParams) -> usize {
    HEADER + (2 * params.degree() * coeff_bits(params)).div_ceil(8)
}

pub fn serialize_switched(ct: &SwitchedCiphertext) -> Vec<u8> {
    let params = &ct.params;
    let bits = coeff_bits(params);
    let mut out = Vec::with_capacity(serialized_switched_len(params));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[VERSION, params.id(), FLAG_SWITCHED, 2]);
    out.extend_from_slice(&(params.degree() as u32).to_le_bytes());
    out.push(bits as u8);
    let (mut acc, mut filled) = (0u128, 0usize);
    for &v in ct.c.iter().flatten() {
        acc |= (v as u128) << filled;
        filled += bits;
        while filled >= 8 {
            out.push(acc as u8);
            acc >>= 8;
            filled -= 8;
        }
    }
    if filled > 0 {
        out.push(acc as u8);
    }
    out
}

pub fn deserialize_switched(
    bytes: &[u8],
    params: &BfvParams,
) -> Result<SwitchedCiphertext, HeError> {
    let err = |m: &str| HeError::Decode(m.into());
    if bytes.len() < HEADER {
        return Err(err("truncated input"));
    }
    if &bytes[..4] != MAGIC {
        return Err(err("bad ciphertext magic"));
    }
    let bits = coeff_bits(params);
    let n = params.degree();
    let expected = [VERSION, params.id(), FLAG_SWITCHED, 2];
    if bytes[4..8] != expected
        || u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize != n
        || bytes[12] as usize != bits
    {
        return Err(err("switched ciphertext header does not match parameters"));
    }
    if bytes.len() != serialized_switched_len(params) {
        return Err(err("switched ciphertext has the wrong length"));
    }
    let q0 = params.0.q.modulus(0).value();
    let mask = (1u128 << bits) - 1;
    let mut coeffs = Vec::with_capacity(2 * n);
    let (mut acc, mut filled) = (0u128, 0usize);
    let mut body = bytes[HEADER..].iter();
    for _ in 0..2 * n {
        while filled < bits {
            acc |= (*body.next().expect("length checked") as u128) << filled;
            filled += 8;
        }
        let v = (acc & mask) as u64;
        if v >= q0 {
            return Err(err("coefficient not reduced mod q_0"));
        }
        coeffs.push(v);
        acc >>= bits;
        filled -= bits;
    }
    if acc != 0 {
        return Err(err("nonzero padding bits"));
    }
    let c1 = coeffs.split_off(n);
    Ok(SwitchedCiphertext {
        params: params.clone(),
        c: [coeffs, c1],
    })
}
