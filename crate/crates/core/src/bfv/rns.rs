//! Residue number system over NTT-friendly word primes, with mixed-radix
//! (Garner) reconstruction used for exact sign tests and rounding.

use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::ring::{Modulus, NttTable, ShoupConst};

#[derive(Debug)]
pub struct RnsBasis {
    moduli: Vec<Modulus>,
    ntt: Vec<Arc<NttTable>>,
    // prefix_mod[i][j] = (m_0 ... m_{j-1}) mod m_i, j < i
    prefix_mod: Vec<Vec<ShoupConst>>,
    // (m_0 ... m_{i-1})^{-1} mod m_i
    prefix_inv: Vec<ShoupConst>,
    // mixed-radix digits of (M - 1) / 2
    half_digits: Vec<u64>,
    product: BigUint,
}

impl RnsBasis {
    /// Panics unless every prime supports a degree-`n` negacyclic NTT.
    pub fn new(primes: &[u64], n: usize) -> Self {
        let moduli: Vec<Modulus> = primes.iter().map(|&p| Modulus::new(p)).collect();
        let ntt = primes
            .iter()
            .map(|&p| NttTable::cached(n, p).expect("prime must be NTT-friendly"))
            .collect();
        let mut prefix_mod = Vec::with_capacity(primes.len());
        let mut prefix_inv = Vec::with_capacity(primes.len());
        for (i, mi) in moduli.iter().enumerate() {
            let mut row = Vec::with_capacity(i);
            let mut acc = 1u64;
            for mj in &moduli[..i] {
                row.push(mi.shoup(acc));
                acc = mi.mul(acc, mi.reduce(mj.value()));
            }
            prefix_mod.push(row);
            prefix_inv.push(mi.shoup(mi.inv(acc).expect("moduli must be coprime")));
        }
        let product: BigUint = primes.iter().map(|&p| BigUint::from(p)).product();
        let half = (&product - 1u32) / 2u32;
        let half_digits = mixed_radix_of(&half, primes);
        RnsBasis {
            moduli,
            ntt,
            prefix_mod,
            prefix_inv,
            half_digits,
            product,
        }
    }

    pub fn len(&self) -> usize {
        self.moduli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moduli.is_empty()
    }

    pub fn moduli(&self) -> &[Modulus] {
        &self.moduli
    }

    pub fn modulus(&self, i: usize) -> &Modulus {
        &self.moduli[i]
    }

    pub fn ntt(&self, i: usize) -> &NttTable {
        &self.ntt[i]
    }

    pub fn product(&self) -> &BigUint {
        &self.product
    }

    /// Mixed-radix digits `v` with `x = v_0 + v_1 m_0 + v_2 m_0 m_1 + ...`.
    #[inline]
    pub fn mixed_radix(&self, residues: &[u64], v: &mut [u64]) {
        v[0] = residues[0];
        for i in 1..self.moduli.len() {
            let m = &self.moduli[i];
            let mut acc = 0u64;
            for (vj, c) in v[..i].iter().zip(&self.prefix_mod[i]) {
                acc = m.add(acc, m.mul_shoup(*vj, *c));
            }
            v[i] = m.mul_shoup(m.sub(residues[i], acc), self.prefix_inv[i]);
        }
    }

    /// Whether the value with digits `v` exceeds `(M - 1) / 2`.
    #[inline]
    pub fn is_upper_half(&self, v: &[u64]) -> bool {
        for (a, b) in v.iter().zip(&self.half_digits).rev() {
            if a != b {
                return a > b;
            }
        }
        false
    }

    /// Approximate `log2` of the value with digits `v`.
    pub fn log2_of_digits(&self, v: &[u64]) -> f64 {
        let mut x = 0f64;
        for (d, m) in v.iter().zip(&self.moduli).rev() {
            x = x * m.value() as f64 + *d as f64;
        }
        x.log2()
    }

    pub fn compose(&self, residues: &[u64]) -> BigUint {
        let mut v = vec![0u64; self.len()];
        self.mixed_radix(residues, &mut v);
        v.iter()
            .zip(&self.moduli)
            .rev()
            .fold(BigUint::default(), |acc, (d, m)| acc * m.value() + *d)
    }

    pub fn decompose(&self, x: &BigUint) -> Vec<u64> {
        self.moduli
            .iter()
            .map(|m| (x % m.value()).to_u64().unwrap())
            .collect()
    }
}

/// Mixed-radix digits of `x < prod(primes)`.
pub fn mixed_radix_of(x: &BigUint, primes: &[u64]) -> Vec<u64> {
    let mut rest = x.clone();
    primes
        .iter()
        .map(|&p| {
            let d = (&rest % p).to_u64().unwrap();
            rest /= p;
            d
        })
        .collect()
}

/// Residues of one polynomial, stored prime-major: `data[i * n + j]` is
/// coefficient (or NTT slot) `j` modulo prime `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RnsPoly {
    n: usize,
    data: Vec<u64>,
}

impl RnsPoly {
    pub fn zero(n: usize, limbs: usize) -> Self {
        RnsPoly {
            n,
            data: vec![0; n * limbs],
        }
    }

    pub fn from_data(n: usize, data: Vec<u64>) -> Self {
        assert_eq!(data.len() % n, 0);
        RnsPoly { n, data }
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn limbs(&self) -> usize {
        self.data.len() / self.n
    }

    pub fn limb(&self, i: usize) -> &[u64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn limb_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u64] {
        &mut self.data
    }

    pub fn forward(&mut self, basis: &RnsBasis) {
        for i in 0..basis.len() {
            basis.ntt(i).forward(self.limb_mut(i));
        }
    }

    pub fn inverse(&mut self, basis: &RnsBasis) {
        for i in 0..basis.len() {
            basis.ntt(i).inverse(self.limb_mut(i));
        }
    }

    pub fn add_assign(&mut self, other: &RnsPoly, basis: &RnsBasis) {
        self.zip_assign(other, basis, |m, a, b| m.add(a, b));
    }

    pub fn sub_assign(&mut self, other: &RnsPoly, basis: &RnsBasis) {
        self.zip_assign(other, basis, |m, a, b| m.sub(a, b));
    }

    /// Pointwise product; both operands in NTT form.
    pub fn mul_assign(&mut self, other: &RnsPoly, basis: &RnsBasis) {
        self.zip_assign(other, basis, |m, a, b| m.mul(a, b));
    }

    /// `self += a * b` pointwise.
    pub fn fma_assign(&mut self, a: &RnsPoly, b: &RnsPoly, basis: &RnsBasis) {
        let n = self.n;
        for (i, m) in basis.moduli().iter().enumerate() {
            let dst = &mut self.data[i * n..(i + 1) * n];
            for ((d, &x), &y) in dst.iter_mut().zip(a.limb(i)).zip(b.limb(i)) {
                *d = m.add(*d, m.mul(x, y));
            }
        }
    }

    pub fn neg_assign(&mut self, basis: &RnsBasis) {
        let n = self.n;
        for (i, m) in basis.moduli().iter().enumerate() {
            for x in &mut self.data[i * n..(i + 1) * n] {
                *x = m.neg(*x);
            }
        }
    }

    fn zip_assign(
        &mut self,
        other: &RnsPoly,
        basis: &RnsBasis,
        f: impl Fn(&Modulus, u64, u64) -> u64,
    ) {
        let n = self.n;
        for (i, m) in basis.moduli().iter().enumerate() {
            for (x, &y) in self.data[i * n..(i + 1) * n].iter_mut().zip(other.limb(i)) {
                *x = f(m, *x, y);
            }
        }
    }
}
