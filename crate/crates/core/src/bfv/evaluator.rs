use std::sync::Arc;

use super::ciphertext::BfvCiphertext;
use super::client::{add_scaled_plain, automorphism_rns, top_digits};
use super::keys::EvalKeySet;
use super::params::{BfvParams, FUSED_TERMS};
use super::rns::{RnsBasis, RnsPoly};
use crate::error::HeError;
use crate::he::{check_inner_product_shape, HeEvaluator, HeParams, OpCounts, OpMeter};
use crate::ring::{monomial_mul_into, RingElement};

/// Server-side evaluator holding the client's evaluation keys.
#[derive(Debug)]
pub struct BfvEvaluator {
    params: BfvParams,
    keys: Arc<EvalKeySet>,
    meter: OpMeter,
}

impl BfvEvaluator {
    pub fn new(keys: Arc<EvalKeySet>) -> Self {
        BfvEvaluator {
            params: keys.params.clone(),
            keys,
            meter: OpMeter::default(),
        }
    }

    pub fn bfv_params(&self) -> &BfvParams {
        &self.params
    }

    pub fn keys(&self) -> &EvalKeySet {
        &self.keys
    }

    fn check(&self, a: &BfvCiphertext) -> Result<(), HeError> {
        if a.params != self.params {
            return Err(HeError::ParamMismatch);
        }
        Ok(())
    }

    fn map2(
        &self,
        a: &BfvCiphertext,
        b: &BfvCiphertext,
        f: impl Fn(&mut RnsPoly, &RnsPoly),
    ) -> Result<BfvCiphertext, HeError> {
        self.check(a)?;
        self.check(b)?;
        let mut c = a.c.clone();
        f(&mut c[0], &b.c[0]);
        f(&mut c[1], &b.c[1]);
        Ok(BfvCiphertext::new(&self.params, c, a.depth.max(b.depth)))
    }

    /// Both components lifted to `Q u P` and transformed; cached per ciphertext.
    fn lifted(&self, a: &BfvCiphertext) -> Arc<[RnsPoly; 2]> {
        a.lifted
            .get_or_init(|| {
                let qp = &self.params.0.qp;
                let mut l0 = self.lift(&a.c[0]);
                let mut l1 = self.lift(&a.c[1]);
                l0.forward(qp);
                l1.forward(qp);
                Arc::new([l0, l1])
            })
            .clone()
    }

    /// Centered extension of a coefficient-form polynomial from `Q` to `Q u P`.
    fn lift(&self, c: &RnsPoly) -> RnsPoly {
        let p = &self.params.0;
        let (n, l, b) = (p.n, p.q.len(), p.qp.len());
        let mut data = Vec::with_capacity(n * b);
        data.extend_from_slice(c.data());
        data.resize(n * b, 0);
        let mut out = RnsPoly::from_data(n, data);
        let mut res = vec![0u64; l];
        let mut v = vec![0u64; l];
        for j in 0..n {
            for (i, r) in res.iter_mut().enumerate() {
                *r = c.limb(i)[j];
            }
            p.q.mixed_radix(&res, &mut v);
            let neg = p.q.is_upper_half(&v);
            for a in 0..b - l {
                let m = p.qp.modulus(l + a);
                let mut acc = 0u64;
                for (vi, w) in v.iter().zip(&p.q_prefix_mod_p[a]) {
                    acc = m.add(acc, m.mul_shoup(*vi, *w));
                }
                if neg {
                    acc = m.sub(acc, p.q_mod_p[a]);
                }
                out.limb_mut(l + a)[j] = acc;
            }
        }
        out
    }

    /// `round(t x / Q)` for coefficient-form `x` over `Q u P`, returned over `Q`.
    fn scale_round(&self, x: &RnsPoly) -> RnsPoly {
        let p = &self.params.0;
        let (n, l, b) = (p.n, p.q.len(), p.qp.len());
        let t = p.t.value() as u128;
        let mut out = RnsPoly::zero(n, l);
        let mut res = vec![0u64; b];
        let mut v = vec![0u64; b];
        for j in 0..n {
            for (i, r) in res.iter_mut().enumerate() {
                *r = x.limb(i)[j];
            }
            p.qp.mixed_radix(&res, &mut v);
            let neg = p.qp.is_upper_half(&v);
            let rounded = ((t * top_digits(&v, &self.params) + p.top_den / 2) / p.top_den) as u64;
            for i in 0..l {
                let m = p.q.modulus(i);
                let mut z = 0u64;
                for (va, w) in v[l..].iter().zip(&p.p_prefix_mod_q[i]) {
                    z = m.add(z, m.mul_shoup(*va, *w));
                }
                let mut r = m.add(m.mul_shoup(z, p.t_mod_q[i]), m.reduce(rounded));
                if neg {
                    r = m.sub(r, p.tp_mod_q[i]);
                }
                out.limb_mut(i)[j] = r;
            }
        }
        out
    }

    /// Rescales a three-component tensor (coefficient form over `Q u P`) and
    /// relinearizes it back to two components over `Q`.
    fn finish_product(&self, d: [RnsPoly; 3]) -> Result<[RnsPoly; 2], HeError> {
        let relin = self
            .keys
            .relin
            .as_ref()
            .ok_or(HeError::InvalidParams("no relinearization key".into()))?;
        let q = &self.params.0.q;
        let [mut c0, mut c1, c2] = d.map(|x| self.scale_round(&x));
        let (k0, k1) = relin.switch(&self.params, &c2);
        c0.add_assign(&k0, q);
        c1.add_assign(&k1, q);
        Ok([c0, c1])
    }

    /// NTT-form tensor of two ciphertexts over `Q u P`.
    fn tensor(&self, a: &BfvCiphertext, b: &BfvCiphertext) -> [RnsPoly; 3] {
        let qp = &self.params.0.qp;
        let la = self.lifted(a);
        let lb = self.lifted(b);
        let mut d0 = la[0].clone();
        d0.mul_assign(&lb[0], qp);
        let mut d1 = la[0].clone();
        d1.mul_assign(&lb[1], qp);
        d1.fma_assign(&la[1], &lb[0], qp);
        let mut d2 = la[1].clone();
        d2.mul_assign(&lb[1], qp);
        [d0, d1, d2]
    }

    /// Centered lift of a plaintext to `basis` in NTT form.
    fn plain_ntt_in(&self, pt: &RingElement, basis: &RnsBasis) -> RnsPoly {
        let t = self.params.0.t.value();
        let mut out = RnsPoly::zero(self.params.0.n, basis.len());
        for (i, m) in basis.moduli().iter().enumerate() {
            let dst = out.limb_mut(i);
            for (o, &c) in dst.iter_mut().zip(pt.coeffs()) {
                *o = if c > t / 2 {
                    m.neg(m.reduce(t - c))
                } else {
                    m.reduce(c)
                };
            }
            basis.ntt(i).forward(dst);
        }
        out
    }

    /// Unreduced `sum_r tensor(a_r, b_r) * plains[r][j]` for every column.
    fn accumulate(
        &self,
        pairs: &[(&BfvCiphertext, &BfvCiphertext)],
        plains: &[&[RingElement]],
        s: usize,
    ) -> Vec<[RnsPoly; 3]> {
        let p = &self.params.0;
        let zero = RnsPoly::zero(p.n, p.qp.len());
        let mut acc = vec![[zero.clone(), zero.clone(), zero]; s];
        for ((a, b), row) in pairs.iter().zip(plains) {
            let d = self.tensor(a, b);
            for (acc_j, pt) in acc.iter_mut().zip(row.iter()) {
                let w = self.plain_ntt_in(pt, &p.qp);
                for (x, y) in acc_j.iter_mut().zip(&d) {
                    x.fma_assign(y, &w, &p.qp);
                }
            }
        }
        acc
    }
}

impl HeEvaluator for BfvEvaluator {
    type Ct = BfvCiphertext;

    fn params(&self) -> &HeParams {
        self.params.he_params()
    }

    fn meter(&self) -> &OpMeter {
        &self.meter
    }

    fn depth(&self, a: &BfvCiphertext) -> u32 {
        a.depth
    }

    fn add(&self, a: &BfvCiphertext, b: &BfvCiphertext) -> Result<BfvCiphertext, HeError> {
        let q = &self.params.0.q;
        let r = self.map2(a, b, |x, y| x.add_assign(y, q))?;
        self.meter.record_add();
        Ok(r)
    }

    fn sub(&self, a: &BfvCiphertext, b: &BfvCiphertext) -> Result<BfvCiphertext, HeError> {
        let q = &self.params.0.q;
        let r = self.map2(a, b, |x, y| x.sub_assign(y, q))?;
        self.meter.record_add();
        Ok(r)
    }

    fn negate(&self, a: &BfvCiphertext) -> Result<BfvCiphertext, HeError> {
        self.check(a)?;
        let q = &self.params.0.q;
        let mut c = a.c.clone();
        c[0].neg_assign(q);
        c[1].neg_assign(q);
        Ok(BfvCiphertext::new(&self.params, c, a.depth))
    }

    fn add_plain(&self, a: &BfvCiphertext, pt: &RingElement) -> Result<BfvCiphertext, HeError> {
        self.check(a)?;
        self.params().check_plain(pt)?;
        let mut c = a.c.clone();
        add_scaled_plain(&mut c[0], pt, &self.params);
        self.meter.record_add();
        Ok(BfvCiphertext::new(&self.params, c, a.depth))
    }

    fn plain_mul(&self, pt: &RingElement, a: &BfvCiphertext) -> Result<BfvCiphertext, HeError> {
        self.check(a)?;
        self.params().check_plain(pt)?;
        let q = &self.params.0.q;
        let w = self.plain_ntt_in(pt, q);
        let mut c = a.c.clone();
        for ci in c.iter_mut() {
            ci.forward(q);
            ci.mul_assign(&w, q);
            ci.inverse(q);
        }
        self.meter.record_plain_mul();
        Ok(BfvCiphertext::new(&self.params, c, a.depth))
    }

    fn mul(&self, a: &BfvCiphertext, b: &BfvCiphertext) -> Result<BfvCiphertext, HeError> {
        self.check(a)?;
        self.check(b)?;
        let qp = &self.params.0.qp;
        let d = self.tensor(a, b).map(|mut x| {
            x.inverse(qp);
            x
        });
        let c = self.finish_product(d)?;
        self.meter.record_mul();
        Ok(BfvCiphertext::new(
            &self.params,
            c,
            1 + a.depth.max(b.depth),
        ))
    }

    /// Accumulates the plaintext-scaled tensors over `Q u P` and rescales and
    /// relinearizes once per column.
    fn product_inner_product(
        &self,
        pairs: &[(&BfvCiphertext, &BfvCiphertext)],
        plains: &[&[RingElement]],
    ) -> Result<Vec<BfvCiphertext>, HeError> {
        let s = check_inner_product_shape(pairs.len(), plains)?;
        for (a, b) in pairs {
            self.check(a)?;
            self.check(b)?;
        }
        for pt in plains.iter().flat_map(|r| r.iter()) {
            self.params().check_plain(pt)?;
        }
        let p = &self.params.0;
        let block = pairs
            .len()
            .div_ceil(rayon::current_num_threads())
            .clamp(1, FUSED_TERMS);
        let row_blocks: Vec<usize> = (0..pairs.len()).step_by(block).collect();
        let partial = crate::par::map(&row_blocks, |&start| {
            let end = (start + block).min(pairs.len());
            Ok::<_, HeError>(self.accumulate(&pairs[start..end], &plains[start..end], s))
        })?;
        let depth = 1 + pairs
            .iter()
            .map(|(a, b)| a.depth.max(b.depth))
            .max()
            .unwrap_or(0);
        let columns: Vec<usize> = (0..s).collect();
        let out = crate::par::map(&columns, |&j| {
            let mut sums: Vec<[RnsPoly; 3]> = partial.iter().map(|acc| acc[j].clone()).collect();
            for d in sums.iter_mut() {
                for x in d.iter_mut() {
                    x.inverse(&p.qp);
                }
            }
            let mut c = self.finish_product(sums.remove(0))?;
            for d in sums {
                let other = self.finish_product(d)?;
                c[0].add_assign(&other[0], &p.q);
                c[1].add_assign(&other[1], &p.q);
            }
            Ok::<_, HeError>(BfvCiphertext::new(&self.params, c, depth))
        })?;
        let n = pairs.len() as u64;
        self.meter.record(OpCounts {
            add: (n - 1) * s as u64,
            plain_mul: n * s as u64,
            mul: n,
            substitute: 0,
        });
        Ok(out)
    }

    fn substitute(&self, a: &BfvCiphertext, g: usize) -> Result<BfvCiphertext, HeError> {
        self.check(a)?;
        let n = self.params.degree();
        if g.is_multiple_of(2) {
            return Err(crate::error::RingError::EvenGaloisElement(g).into());
        }
        let g = g % (2 * n);
        if g == 1 {
            self.meter.record_substitute();
            return Ok(BfvCiphertext::new(&self.params, a.c.clone(), a.depth));
        }
        let key = self
            .keys
            .galois
            .get(&g)
            .ok_or(HeError::MissingGaloisKey(g))?;
        let q = &self.params.0.q;
        let mut c0 = automorphism_rns(&a.c[0], g, &self.params);
        let c1 = automorphism_rns(&a.c[1], g, &self.params);
        let (k0, k1) = key.switch(&self.params, &c1);
        c0.add_assign(&k0, q);
        self.meter.record_substitute();
        Ok(BfvCiphertext::new(&self.params, [c0, k1], a.depth))
    }

    fn monomial_mul(&self, a: &BfvCiphertext, e: i64) -> Result<BfvCiphertext, HeError> {
        self.check(a)?;
        let p = &self.params.0;
        let c = a.c.clone().map(|src| {
            let mut out = RnsPoly::zero(p.n, p.q.len());
            for (i, m) in p.q.moduli().iter().enumerate() {
                monomial_mul_into(src.limb(i), e, m, out.limb_mut(i));
            }
            out
        });
        self.meter.record_plain_mul();
        Ok(BfvCiphertext::new(&self.params, c, a.depth))
    }
}
