//! Deterministic byte layouts for ciphertexts and evaluation keys.
//!
//! Ciphertext: `"CWCT" | version | params id | flags | count | N (u32) |
//! width | [seed] | count * N coefficients`, each coefficient the CRT
//! composition mod `Q` in `width = ceil(log2 Q / 8)` little-endian bytes.
//! Flag bit 0 marks a seeded ciphertext whose `c1` is regenerated from the
//! 32-byte seed, in which case only `c0` is stored.

use std::collections::BTreeMap;

use super::ciphertext::BfvCiphertext;
use super::keys::{EvalKeySet, KeySwitchKey};
use super::params::BfvParams;
use super::rns::RnsPoly;
use super::sample::uniform_from_seed;
use crate::error::HeError;

const CT_MAGIC: &[u8; 4] = b"CWCT";
const KEY_MAGIC: &[u8; 4] = b"CWEK";
const VERSION: u8 = 1;
const FLAG_SEEDED: u8 = 1;
const CT_HEADER: usize = 13;

fn err(msg: impl Into<String>) -> HeError {
    HeError::Decode(msg.into())
}

/// Exact serialized size of a ciphertext.
pub fn serialized_ciphertext_len(params: &BfvParams, seeded: bool) -> usize {
    let body = params.degree() * params.coeff_bytes();
    if seeded {
        CT_HEADER + 32 + body
    } else {
        CT_HEADER + 2 * body
    }
}

pub fn serialize_ciphertext(ct: &BfvCiphertext) -> Vec<u8> {
    let params = &ct.params;
    let seeded = ct.seed.is_some();
    let mut out = Vec::with_capacity(serialized_ciphertext_len(params, seeded));
    out.extend_from_slice(CT_MAGIC);
    out.push(VERSION);
    out.push(params.id());
    out.push(if seeded { FLAG_SEEDED } else { 0 });
    out.push(if seeded { 1 } else { 2 });
    out.extend_from_slice(&(params.degree() as u32).to_le_bytes());
    out.push(params.coeff_bytes() as u8);
    if let Some(seed) = &ct.seed {
        out.extend_from_slice(seed);
        write_poly(&mut out, &ct.c[0], params);
    } else {
        write_poly(&mut out, &ct.c[0], params);
        write_poly(&mut out, &ct.c[1], params);
    }
    out
}

pub fn deserialize_ciphertext(bytes: &[u8], params: &BfvParams) -> Result<BfvCiphertext, HeError> {
    let mut r = Reader(bytes);
    if r.take(4)? != CT_MAGIC {
        return Err(err("bad ciphertext magic"));
    }
    if r.u8()? != VERSION {
        return Err(err("unsupported ciphertext version"));
    }
    if r.u8()? != params.id() {
        return Err(err("ciphertext belongs to different parameters"));
    }
    let flags = r.u8()?;
    let count = r.u8()?;
    if r.u32()? as usize != params.degree() || r.u8()? as usize != params.coeff_bytes() {
        return Err(err("ciphertext shape does not match parameters"));
    }
    let seeded = flags & FLAG_SEEDED != 0;
    if flags & !FLAG_SEEDED != 0 || count != if seeded { 1 } else { 2 } {
        return Err(err("inconsistent flags and component count"));
    }
    let seed: Option<[u8; 32]> = if seeded {
        Some(r.take(32)?.try_into().unwrap())
    } else {
        None
    };
    let c0 = read_poly(&mut r, params)?;
    let c1 = match &seed {
        Some(s) => uniform_from_seed(&params.0.q, params.degree(), s, 0),
        None => read_poly(&mut r, params)?,
    };
    if !r.0.is_empty() {
        return Err(err("trailing bytes after ciphertext"));
    }
    let mut ct = BfvCiphertext::new(params, [c0, c1], 0);
    ct.seed = seed;
    Ok(ct)
}

fn write_poly(out: &mut Vec<u8>, poly: &RnsPoly, params: &BfvParams) {
    let q = &params.0.q;
    let (n, l) = (params.degree(), q.len());
    let width = params.coeff_bytes();
    let mut res = vec![0u64; l];
    let mut v = vec![0u64; l];
    let mut limbs = vec![0u64; width.div_ceil(8)];
    let mut buf = vec![0u8; limbs.len() * 8];
    for j in 0..n {
        for (i, r) in res.iter_mut().enumerate() {
            *r = poly.limb(i)[j];
        }
        q.mixed_radix(&res, &mut v);
        limbs.fill(0);
        limbs[0] = v[l - 1];
        for i in (0..l - 1).rev() {
            mul_add_small(&mut limbs, q.modulus(i).value(), v[i]);
        }
        for (chunk, limb) in buf.chunks_exact_mut(8).zip(&limbs) {
            chunk.copy_from_slice(&limb.to_le_bytes());
        }
        out.extend_from_slice(&buf[..width]);
    }
}

// limbs = limbs * m + d
fn mul_add_small(limbs: &mut [u64], m: u64, d: u64) {
    let mut carry = d as u128;
    for x in limbs.iter_mut() {
        let v = *x as u128 * m as u128 + carry;
        *x = v as u64;
        carry = v >> 64;
    }
    debug_assert_eq!(carry, 0);
}

fn read_poly(r: &mut Reader<'_>, params: &BfvParams) -> Result<RnsPoly, HeError> {
    let p = &params.0;
    let (n, l) = (p.n, p.q.len());
    let width = params.coeff_bytes();
    let body = r.take(n * width)?;
    let mut out = RnsPoly::zero(n, l);
    let mut limbs = vec![0u64; width.div_ceil(8)];
    let mut buf = vec![0u8; limbs.len() * 8];
    for (j, coeff) in body.chunks_exact(width).enumerate() {
        buf.fill(0);
        buf[..width].copy_from_slice(coeff);
        for (limb, chunk) in limbs.iter_mut().zip(buf.chunks_exact(8)) {
            *limb = u64::from_le_bytes(chunk.try_into().unwrap());
        }
        if !less_than(&limbs, &p.q_limbs) {
            return Err(err("coefficient not reduced mod Q"));
        }
        for i in 0..l {
            let m = p.q.modulus(i);
            let mut acc = 0u64;
            for &limb in limbs.iter().rev() {
                acc = m.reduce_u128(((acc as u128) << 64) | limb as u128);
            }
            out.limb_mut(i)[j] = acc;
        }
    }
    Ok(out)
}

fn less_than(a: &[u64], b: &[u64]) -> bool {
    let len = a.len().max(b.len());
    for i in (0..len).rev() {
        let (x, y) = (
            a.get(i).copied().unwrap_or(0),
            b.get(i).copied().unwrap_or(0),
        );
        if x != y {
            return x < y;
        }
    }
    false
}

struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], HeError> {
        if self.0.len() < n {
            return Err(err("truncated input"));
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, HeError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, HeError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, HeError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// `"CWEK" | version | params id | N (u32) | has relin | galois count (u16) |
/// [relin key] | (g (u32) | key)*`; a key is `seed | digits (u16) | b`, with
/// `b` as raw NTT-form residues (u64 little-endian, prime-major).
pub fn serialize_eval_keys(keys: &EvalKeySet) -> Vec<u8> {
    let params = &keys.params;
    let mut out = Vec::new();
    out.extend_from_slice(KEY_MAGIC);
    out.push(VERSION);
    out.push(params.id());
    out.extend_from_slice(&(params.degree() as u32).to_le_bytes());
    out.push(keys.relin.is_some() as u8);
    out.extend_from_slice(&(keys.galois.len() as u16).to_le_bytes());
    let write_key = |out: &mut Vec<u8>, k: &KeySwitchKey| {
        out.extend_from_slice(&k.seed);
        out.extend_from_slice(&(k.b.len() as u16).to_le_bytes());
        for poly in &k.b {
            for x in poly.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    };
    if let Some(k) = &keys.relin {
        write_key(&mut out, k);
    }
    for (&g, k) in &keys.galois {
        out.extend_from_slice(&(g as u32).to_le_bytes());
        write_key(&mut out, k);
    }
    out
}

pub fn deserialize_eval_keys(bytes: &[u8], params: &BfvParams) -> Result<EvalKeySet, HeError> {
    let mut r = Reader(bytes);
    if r.take(4)? != KEY_MAGIC {
        return Err(err("bad key magic"));
    }
    if r.u8()? != VERSION {
        return Err(err("unsupported key version"));
    }
    if r.u8()? != params.id() || r.u32()? as usize != params.degree() {
        return Err(err("keys belong to different parameters"));
    }
    let has_relin = r.u8()?;
    let count = r.u16()?;
    let p = &params.0;
    let digits: usize = p.digits.iter().sum();
    let read_key = |r: &mut Reader<'_>| -> Result<KeySwitchKey, HeError> {
        let seed: [u8; 32] = r.take(32)?.try_into().unwrap();
        if r.u16()? as usize != digits {
            return Err(err("digit count does not match parameters"));
        }
        let mut b = Vec::with_capacity(digits);
        for _ in 0..digits {
            let raw = r.take(8 * p.n * p.q.len())?;
            let mut poly = RnsPoly::zero(p.n, p.q.len());
            for (i, m) in p.q.moduli().iter().enumerate() {
                for (j, x) in poly.limb_mut(i).iter_mut().enumerate() {
                    let off = 8 * (i * p.n + j);
                    *x = u64::from_le_bytes(raw[off..off + 8].try_into().unwrap());
                    if *x >= m.value() {
                        return Err(err("key residue not reduced"));
                    }
                }
            }
            b.push(poly);
        }
        Ok(KeySwitchKey::from_parts(params, seed, b))
    };
    let relin = match has_relin {
        0 => None,
        1 => Some(read_key(&mut r)?),
        _ => return Err(err("bad relinearization flag")),
    };
    let mut galois = BTreeMap::new();
    for _ in 0..count {
        let g = r.u32()? as usize;
        if g.is_multiple_of(2) || g >= 2 * p.n {
            return Err(err("invalid Galois element"));
        }
        galois.insert(g, read_key(&mut r)?);
    }
    if !r.0.is_empty() {
        return Err(err("trailing bytes after keys"));
    }
    Ok(EvalKeySet {
        params: params.clone(),
        relin,
        galois,
    })
}
