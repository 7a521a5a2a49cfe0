use std::fmt;
use std::sync::Arc;

use super::modulus::{Modulus, MAX_MODULUS_BITS};
use super::ntt::NttTable;
use super::prime::is_prime;
use crate::error::RingError;

#[derive(Debug)]
struct ParamsInner {
    degree: usize,
    modulus: Modulus,
    ntt: Option<Arc<NttTable>>,
}

/// Ring `Z_q[x]/(x^N + 1)`; cheap to clone.
#[derive(Clone, Debug)]
pub struct RingParams(Arc<ParamsInner>);

impl PartialEq for RingParams {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.degree() == other.degree() && self.modulus() == other.modulus())
    }
}

impl Eq for RingParams {}

impl RingParams {
    /// `degree` must be a power of two and `modulus` an odd prime below `2^62`.
    /// The NTT is enabled whenever `2N | q - 1`.
    pub fn new(degree: usize, modulus: u64) -> Result<Self, RingError> {
        if !degree.is_power_of_two() || degree < 2 {
            return Err(RingError::InvalidDegree(degree));
        }
        if modulus >= 1u64 << MAX_MODULUS_BITS || modulus == 2 || !is_prime(modulus) {
            return Err(RingError::InvalidModulus(modulus));
        }
        Ok(RingParams(Arc::new(ParamsInner {
            degree,
            modulus: Modulus::new(modulus),
            ntt: NttTable::cached(degree, modulus),
        })))
    }

    pub fn degree(&self) -> usize {
        self.0.degree
    }

    pub fn modulus(&self) -> u64 {
        self.0.modulus.value()
    }

    pub fn arith(&self) -> &Modulus {
        &self.0.modulus
    }

    pub fn ntt_enabled(&self) -> bool {
        self.0.ntt.is_some()
    }

    pub fn ntt(&self) -> Option<&NttTable> {
        self.0.ntt.as_deref()
    }
}

/// Polynomial with canonical coefficients in `[0, q)`.
#[derive(Clone, PartialEq, Eq)]
pub struct RingElement {
    params: RingParams,
    coeffs: Vec<u64>,
}

impl fmt::Debug for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "RingElement(N={}, q={}, {:?})",
            self.degree(),
            self.params.modulus(),
            self.coeffs
        )
    }
}

impl RingElement {
    pub fn zero(params: &RingParams) -> Self {
        RingElement {
            params: params.clone(),
            coeffs: vec![0; params.degree()],
        }
    }

    pub fn constant(params: &RingParams, c: u64) -> Self {
        let mut e = Self::zero(params);
        e.coeffs[0] = params.arith().reduce(c);
        e
    }

    /// `x^e` for any signed exponent.
    pub fn monomial(params: &RingParams, e: i64) -> Self {
        Self::constant(params, 1).monomial_mul(e)
    }

    /// Coefficients must already be canonical.
    pub fn from_coeffs(params: &RingParams, coeffs: Vec<u64>) -> Result<Self, RingError> {
        if coeffs.len() != params.degree() {
            return Err(RingError::LengthMismatch {
                expected: params.degree(),
                got: coeffs.len(),
            });
        }
        if let Some(&c) = coeffs.iter().find(|&&c| c >= params.modulus()) {
            return Err(RingError::CoefficientOutOfRange {
                value: c,
                modulus: params.modulus(),
            });
        }
        Ok(RingElement {
            params: params.clone(),
            coeffs,
        })
    }

    /// Normalizes signed coefficients; shorter inputs are zero-extended.
    pub fn from_signed(params: &RingParams, coeffs: &[i64]) -> Result<Self, RingError> {
        if coeffs.len() > params.degree() {
            return Err(RingError::LengthMismatch {
                expected: params.degree(),
                got: coeffs.len(),
            });
        }
        let m = params.arith();
        let mut out = Self::zero(params);
        for (o, &c) in out.coeffs.iter_mut().zip(coeffs) {
            *o = m.from_i64(c);
        }
        Ok(out)
    }

    pub fn params(&self) -> &RingParams {
        &self.params
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<u64> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    fn check(&self, other: &Self) -> Result<(), RingError> {
        if self.params != other.params {
            return Err(RingError::ParamMismatch);
        }
        Ok(())
    }

    fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(&Modulus, u64, u64) -> u64,
    ) -> Result<Self, RingError> {
        self.check(other)?;
        let m = self.params.arith();
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| f(m, a, b))
            .collect();
        Ok(RingElement {
            params: self.params.clone(),
            coeffs,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, RingError> {
        self.zip_with(other, |m, a, b| m.add(a, b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, RingError> {
        self.zip_with(other, |m, a, b| m.sub(a, b))
    }

    pub fn neg(&self) -> Self {
        let m = self.params.arith();
        let coeffs = self.coeffs.iter().map(|&a| m.neg(a)).collect();
        RingElement {
            params: self.params.clone(),
            coeffs,
        }
    }

    pub fn scalar_mul(&self, c: u64) -> Self {
        let m = self.params.arith();
        let c = m.shoup(m.reduce(c));
        let coeffs = self.coeffs.iter().map(|&a| m.mul_shoup(a, c)).collect();
        RingElement {
            params: self.params.clone(),
            coeffs,
        }
    }

    /// Negacyclic product; NTT when available, schoolbook otherwise.
    pub fn mul(&self, other: &Self) -> Result<Self, RingError> {
        self.check(other)?;
        match self.params.ntt() {
            Some(table) => {
                let m = self.params.arith();
                let mut a = self.coeffs.clone();
                let mut b = other.coeffs.clone();
                table.forward(&mut a);
                table.forward(&mut b);
                for (x, y) in a.iter_mut().zip(&b) {
                    *x = m.mul(*x, *y);
                }
                table.inverse(&mut a);
                Ok(RingElement {
                    params: self.params.clone(),
                    coeffs: a,
                })
            }
            None => self.schoolbook_mul(other),
        }
    }

    /// Quadratic negacyclic product, independent of the NTT.
    pub fn schoolbook_mul(&self, other: &Self) -> Result<Self, RingError> {
        self.check(other)?;
        let n = self.degree();
        let m = self.params.arith();
        let mut acc = vec![0u64; n];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                let p = m.mul(a, b);
                let k = i + j;
                if k < n {
                    acc[k] = m.add(acc[k], p);
                } else {
                    acc[k - n] = m.sub(acc[k - n], p);
                }
            }
        }
        Ok(RingElement {
            params: self.params.clone(),
            coeffs: acc,
        })
    }

    /// `a(x) * x^e`; `e` is taken mod `2N`.
    pub fn monomial_mul(&self, e: i64) -> Self {
        let n = self.degree();
        let mut coeffs = vec![0u64; n];
        monomial_mul_into(&self.coeffs, e, self.params.arith(), &mut coeffs);
        RingElement {
            params: self.params.clone(),
            coeffs,
        }
    }

    /// `a(x^g)` reduced mod `x^N + 1`; `g` must be odd.
    pub fn automorphism(&self, g: usize) -> Result<Self, RingError> {
        let n = self.degree();
        if g.is_multiple_of(2) {
            return Err(RingError::EvenGaloisElement(g));
        }
        let mut coeffs = vec![0u64; n];
        automorphism_into(&self.coeffs, g % (2 * n), self.params.arith(), &mut coeffs);
        Ok(RingElement {
            params: self.params.clone(),
            coeffs,
        })
    }

    /// Forward NTT image; requires NTT support.
    pub fn forward_ntt(&self) -> Result<Vec<u64>, RingError> {
        let table = self.params.ntt().ok_or(RingError::NttUnavailable)?;
        let mut a = self.coeffs.clone();
        table.forward(&mut a);
        Ok(a)
    }

    pub fn inverse_ntt(params: &RingParams, mut values: Vec<u64>) -> Result<Self, RingError> {
        let table = params.ntt().ok_or(RingError::NttUnavailable)?;
        if values.len() != params.degree() {
            return Err(RingError::LengthMismatch {
                expected: params.degree(),
                got: values.len(),
            });
        }
        table.inverse(&mut values);
        Ok(RingElement {
            params: params.clone(),
            coeffs: values,
        })
    }
}

/// Rotation with sign flips: `out = a * x^e mod (x^N + 1, p)`.
pub fn monomial_mul_into(a: &[u64], e: i64, m: &Modulus, out: &mut [u64]) {
    let n = a.len();
    let e = e.rem_euclid(2 * n as i64) as usize;
    for (i, &c) in a.iter().enumerate() {
        let k = (i + e) % (2 * n);
        if k < n {
            out[k] = c;
        } else {
            out[k - n] = m.neg(c);
        }
    }
}

/// Permutation with sign flips: `out(x) = a(x^g)`, `g` odd and reduced mod `2N`.
pub fn automorphism_into(a: &[u64], g: usize, m: &Modulus, out: &mut [u64]) {
    let n = a.len();
    let mask = 2 * n - 1;
    for (i, &c) in a.iter().enumerate() {
        let k = (i * g) & mask;
        if k < n {
            out[k] = c;
        } else {
            out[k - n] = m.neg(c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(n: usize, q: u64) -> RingParams {
        RingParams::new(n, q).unwrap()
    }

    fn arb_element(n: usize, q: u64) -> impl Strategy<Value = RingElement> {
        proptest::collection::vec(0..q, n)
            .prop_map(move |c| RingElement::from_coeffs(&params(n, q), c).unwrap())
    }

    #[test]
    fn small_examples() {
        let p = params(8, 17);
        let a = RingElement::from_signed(&p, &[1, 1]).unwrap();
        let b = RingElement::from_signed(&p, &[16, 1]).unwrap();
        assert_eq!(
            a.add(&b).unwrap(),
            RingElement::from_signed(&p, &[0, 2]).unwrap()
        );

        let p4 = params(4, 17);
        let x3 = RingElement::monomial(&p4, 3);
        let x = RingElement::monomial(&p4, 1);
        assert_eq!(x3.mul(&x).unwrap(), RingElement::constant(&p4, 16));
        assert_eq!(x.automorphism(5).unwrap(), x.neg());
        assert!(x.automorphism(4).is_err());
    }

    #[test]
    fn validation() {
        assert!(RingParams::new(12, 17).is_err());
        assert!(RingParams::new(8, 15).is_err());
        assert!(RingParams::new(8, 2).is_err());
        assert!(RingParams::new(8, (1 << 62) + 135).is_err());
        assert!(params(8, 17).ntt_enabled());
        assert!(!params(16, 17).ntt_enabled());
        let p = params(8, 17);
        assert!(RingElement::from_coeffs(&p, vec![17; 8]).is_err());
        assert!(RingElement::from_coeffs(&p, vec![0; 7]).is_err());
        let other = RingElement::zero(&params(8, 97));
        assert_eq!(
            RingElement::zero(&p).add(&other),
            Err(RingError::ParamMismatch)
        );
    }

    #[test]
    fn monomial_identities() {
        let p = params(16, 97);
        let a = RingElement::from_coeffs(&p, (0..16).collect()).unwrap();
        assert_eq!(a.monomial_mul(0), a);
        assert_eq!(a.monomial_mul(16), a.neg());
        assert_eq!(a.monomial_mul(-4).monomial_mul(4), a);
        assert_eq!(
            a.monomial_mul(5),
            a.schoolbook_mul(&RingElement::monomial(&p, 5)).unwrap()
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn ring_axioms_n8(a in arb_element(8, 17), b in arb_element(8, 17), c in arb_element(8, 17)) {
            ring_axioms(&a, &b, &c)?;
        }

        #[test]
        fn ntt_matches_schoolbook_n8(a in arb_element(8, 97), b in arb_element(8, 97)) {
            prop_assert_eq!(a.mul(&b).unwrap(), a.schoolbook_mul(&b).unwrap());
        }

        #[test]
        fn automorphism_is_ring_homomorphism(a in arb_element(8, 97), b in arb_element(8, 97), gi in 0usize..8) {
            let g = 2 * gi + 1;
            let phi = |x: &RingElement| x.automorphism(g).unwrap();
            prop_assert_eq!(phi(&a.add(&b).unwrap()), phi(&a).add(&phi(&b)).unwrap());
            prop_assert_eq!(phi(&a.mul(&b).unwrap()), phi(&a).mul(&phi(&b)).unwrap());
            let g_inv = (1..16).step_by(2).find(|h| h * g % 16 == 1).unwrap();
            prop_assert_eq!(phi(&a).automorphism(g_inv).unwrap(), a.clone());
        }

        #[test]
        fn ntt_round_trip(a in arb_element(8, 97)) {
            let back = RingElement::inverse_ntt(a.params(), a.forward_ntt().unwrap()).unwrap();
            prop_assert_eq!(back, a);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn ring_axioms_n1024(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let p = params(1024, 12289);
            let mut draw = || RingElement::from_coeffs(&p, (0..1024).map(|_| rng.random_range(0..12289)).collect()).unwrap();
            let (a, b, c) = (draw(), draw(), draw());
            ring_axioms(&a, &b, &c)?;
        }
    }

    fn ring_axioms(a: &RingElement, b: &RingElement, c: &RingElement) -> Result<(), TestCaseError> {
        let add = |x: &RingElement, y: &RingElement| x.add(y).unwrap();
        let mul = |x: &RingElement, y: &RingElement| x.mul(y).unwrap();
        prop_assert_eq!(add(&add(a, b), c), add(a, &add(b, c)));
        prop_assert_eq!(add(a, b), add(b, a));
        prop_assert_eq!(mul(&mul(a, b), c), mul(a, &mul(b, c)));
        prop_assert_eq!(mul(a, b), mul(b, a));
        prop_assert_eq!(mul(a, &add(b, c)), add(&mul(a, b), &mul(a, c)));
        prop_assert!(add(a, &a.neg()).is_zero());
        Ok(())
    }
}
