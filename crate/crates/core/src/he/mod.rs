//! Backend-agnostic homomorphic evaluation contract.

mod encoding;
mod meter;
mod transparent;

pub use encoding::{coeff_decode, coeff_encode, BatchEncoder};
pub use meter::{OpCounts, OpMeter};
pub use transparent::{Transparent, TransparentCt};

use crate::error::HeError;
use crate::ring::{RingElement, RingParams};

/// Parameters shared by every backend: ring degree, plaintext ring `R_t`
/// and the ciphertext modulus width.
#[derive(Clone, Debug, PartialEq)]
pub struct HeParams {
    plain: RingParams,
    log2_q: f64,
}

impl HeParams {
    /// `t` must be an odd prime and `log2_q` must exceed `log2 t`.
    pub fn new(degree: usize, t: u64, log2_q: f64) -> Result<Self, HeError> {
        let plain = RingParams::new(degree, t)?;
        if log2_q <= (t as f64).log2() {
            return Err(HeError::InvalidParams(format!(
                "log2 q = {log2_q} must exceed log2 t"
            )));
        }
        Ok(HeParams { plain, log2_q })
    }

    pub fn degree(&self) -> usize {
        self.plain.degree()
    }

    pub fn plain_modulus(&self) -> u64 {
        self.plain.modulus()
    }

    pub fn plain_ring(&self) -> &RingParams {
        &self.plain
    }

    pub fn log2_q(&self) -> f64 {
        self.log2_q
    }

    /// Ciphertext-to-plaintext size ratio `2 log q / log t`.
    pub fn expansion_factor(&self) -> f64 {
        2.0 * self.log2_q / (self.plain_modulus() as f64).log2()
    }

    pub fn constant(&self, c: u64) -> RingElement {
        RingElement::constant(&self.plain, c)
    }

    /// Accepts only elements of exactly this `R_t`.
    pub fn check_plain(&self, p: &RingElement) -> Result<(), HeError> {
        if p.params() != &self.plain {
            return Err(HeError::PlaintextNotReduced);
        }
        Ok(())
    }
}

/// Server-side operations. Counting: `sub` and `add_plain` count as additions,
/// `monomial_mul` counts as a plaintext multiplication, `negate` is free.
pub trait HeEvaluator: Sync {
    type Ct: Clone + Send + Sync;

    fn params(&self) -> &HeParams;

    fn meter(&self) -> &OpMeter;

    /// Ciphertext-ciphertext multiplicative depth of `a`.
    fn depth(&self, a: &Self::Ct) -> u32;

    fn add(&self, a: &Self::Ct, b: &Self::Ct) -> Result<Self::Ct, HeError>;

    fn sub(&self, a: &Self::Ct, b: &Self::Ct) -> Result<Self::Ct, HeError>;

    fn negate(&self, a: &Self::Ct) -> Result<Self::Ct, HeError>;

    fn add_plain(&self, a: &Self::Ct, p: &RingElement) -> Result<Self::Ct, HeError>;

    fn plain_mul(&self, p: &RingElement, a: &Self::Ct) -> Result<Self::Ct, HeError>;

    fn mul(&self, a: &Self::Ct, b: &Self::Ct) -> Result<Self::Ct, HeError>;

    /// `m(x) -> m(x^g)`; needs a Galois key for `g`.
    fn substitute(&self, a: &Self::Ct, g: usize) -> Result<Self::Ct, HeError>;

    /// `m(x) -> m(x) * x^e`.
    fn monomial_mul(&self, a: &Self::Ct, e: i64) -> Result<Self::Ct, HeError>;

    /// Column `j` of the result is `sum_r (a_r * b_r) * plains[r][j]`.
    ///
    /// Counts one multiplication per pair, one plaintext multiplication per
    /// pair and column, and the additions of the sums. Backends may fuse the
    /// evaluation as long as the decrypted result and the counts agree with
    /// the unfused definition.
    fn product_inner_product(
        &self,
        pairs: &[(&Self::Ct, &Self::Ct)],
        plains: &[&[RingElement]],
    ) -> Result<Vec<Self::Ct>, HeError> {
        check_inner_product_shape(pairs.len(), plains)?;
        let products = crate::par::map(pairs, |(a, b)| self.mul(a, b))?;
        let refs: Vec<&Self::Ct> = products.iter().collect();
        self.plain_inner_product(&refs, plains)
    }

    /// Column `j` of the result is `sum_r cts[r] * plains[r][j]`.
    fn plain_inner_product(
        &self,
        cts: &[&Self::Ct],
        plains: &[&[RingElement]],
    ) -> Result<Vec<Self::Ct>, HeError> {
        let s = check_inner_product_shape(cts.len(), plains)?;
        let columns: Vec<usize> = (0..s).collect();
        crate::par::map(&columns, |&j| {
            let mut acc = self.plain_mul(&plains[0][j], cts[0])?;
            for (ct, row) in cts.iter().zip(plains).skip(1) {
                acc = self.add(&acc, &self.plain_mul(&row[j], ct)?)?;
            }
            Ok::<_, HeError>(acc)
        })
    }

    fn plain_mul_scalar(&self, c: u64, a: &Self::Ct) -> Result<Self::Ct, HeError> {
        self.plain_mul(&self.params().constant(c), a)
    }

    fn add_scalar(&self, a: &Self::Ct, c: u64) -> Result<Self::Ct, HeError> {
        self.add_plain(a, &self.params().constant(c))
    }
}

/// Number of columns of a non-empty inner product whose rows all have equal length.
pub(crate) fn check_inner_product_shape(
    rows: usize,
    plains: &[&[RingElement]],
) -> Result<usize, HeError> {
    if rows == 0 || plains.len() != rows {
        return Err(HeError::InvalidParams(
            "inner product needs one plaintext row per ciphertext".into(),
        ));
    }
    let s = plains[0].len();
    if s == 0 || plains.iter().any(|r| r.len() != s) {
        return Err(HeError::InvalidParams(
            "plaintext rows must be non-empty and of equal length".into(),
        ));
    }
    Ok(s)
}

/// Client-side operations.
pub trait HeClient {
    type Ct;

    fn encrypt(&self, m: &RingElement) -> Result<Self::Ct, HeError>;

    fn decrypt(&self, c: &Self::Ct) -> Result<RingElement, HeError>;
}

/// Galois elements `N/2^a + 1` for `a < c`, the set query expansion uses.
pub fn expansion_galois_elements(degree: usize, c: u32) -> Vec<usize> {
    (0..c).map(|a| degree / (1 << a) + 1).collect()
}
