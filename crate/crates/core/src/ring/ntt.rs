//! Negacyclic number-theoretic transform over `Z_p[x]/(x^N + 1)`.
//!
//! Forward output is in bit-reversed evaluation order; pointwise products of
//! two forward transforms are the transform of the negacyclic product.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::modulus::{Modulus, ShoupConst};
use super::prime::primitive_root_of_unity;

type TableCache = HashMap<(usize, u64), Arc<NttTable>>;

#[derive(Debug)]
pub struct NttTable {
    n: usize,
    modulus: Modulus,
    // psi^{bitrev(i)}
    fwd: Vec<ShoupConst>,
    // psi^{-bitrev(i)}
    inv: Vec<ShoupConst>,
    n_inv: ShoupConst,
}

fn bit_reverse(x: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        x.reverse_bits() >> (usize::BITS - bits)
    }
}

impl NttTable {
    /// `None` unless `n` is a power of two and `2n | p - 1`.
    pub fn new(n: usize, p: u64) -> Option<Self> {
        if !n.is_power_of_two() || n < 2 {
            return None;
        }
        let modulus = Modulus::new(p);
        let psi = primitive_root_of_unity(p, 2 * n as u64)?;
        let psi_inv = modulus.inv(psi)?;
        let log_n = n.trailing_zeros();
        let mut fwd = Vec::with_capacity(n);
        let mut inv = Vec::with_capacity(n);
        for i in 0..n {
            let e = bit_reverse(i, log_n) as u64;
            fwd.push(modulus.shoup(modulus.pow(psi, e)));
            inv.push(modulus.shoup(modulus.pow(psi_inv, e)));
        }
        let n_inv = modulus.shoup(modulus.inv(n as u64)?);
        Some(NttTable {
            n,
            modulus,
            fwd,
            inv,
            n_inv,
        })
    }

    /// Shared table for `(n, p)`, built once per process.
    pub fn cached(n: usize, p: u64) -> Option<Arc<NttTable>> {
        static CACHE: OnceLock<Mutex<TableCache>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(t) = cache.lock().unwrap().get(&(n, p)) {
            return Some(t.clone());
        }
        let table = Arc::new(NttTable::new(n, p)?);
        Some(cache.lock().unwrap().entry((n, p)).or_insert(table).clone())
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    /// In-place forward transform; input and output in `[0, p)`.
    pub fn forward(&self, a: &mut [u64]) {
        assert_eq!(a.len(), self.n);
        let p = self.modulus.value();
        let two_p = 2 * p;
        let mut t = self.n;
        let mut m = 1;
        while m < self.n {
            t >>= 1;
            for i in 0..m {
                let w = self.fwd[m + i];
                let (lo, hi) = a[2 * i * t..2 * i * t + 2 * t].split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let mut u = *x;
                    if u >= two_p {
                        u -= two_p;
                    }
                    let v = self.modulus.mul_shoup_lazy(*y, w);
                    *x = u + v;
                    *y = u + two_p - v;
                }
            }
            m <<= 1;
        }
        for x in a.iter_mut() {
            if *x >= two_p {
                *x -= two_p;
            }
            if *x >= p {
                *x -= p;
            }
        }
    }

    /// In-place inverse transform; input and output in `[0, p)`.
    pub fn inverse(&self, a: &mut [u64]) {
        assert_eq!(a.len(), self.n);
        let two_p = 2 * self.modulus.value();
        let mut t = 1;
        let mut m = self.n;
        while m > 1 {
            let h = m >> 1;
            for i in 0..h {
                let w = self.inv[h + i];
                let (lo, hi) = a[2 * i * t..2 * i * t + 2 * t].split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (u, v) = (*x, *y);
                    let mut s = u + v;
                    if s >= two_p {
                        s -= two_p;
                    }
                    *x = s;
                    *y = self.modulus.mul_shoup_lazy(u + two_p - v, w);
                }
            }
            t <<= 1;
            m = h;
        }
        for x in a.iter_mut() {
            *x = self.modulus.mul_shoup(*x, self.n_inv);
        }
    }
}
