//! Plaintext-evaluating reference backend with operation and depth metering.

use std::collections::BTreeSet;

use super::{HeClient, HeEvaluator, HeParams, OpCounts, OpMeter};
use crate::error::HeError;
use crate::ring::RingElement;

/// A "ciphertext" that carries its plaintext and multiplicative depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransparentCt {
    value: RingElement,
    depth: u32,
}

impl TransparentCt {
    pub fn value(&self) -> &RingElement {
        &self.value
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }
}

#[derive(Debug)]
pub struct Transparent {
    params: HeParams,
    depth_cap: Option<u32>,
    // None admits every odd element
    galois: Option<BTreeSet<usize>>,
    meter: OpMeter,
}

impl Transparent {
    pub fn new(params: HeParams) -> Self {
        Transparent {
            params,
            depth_cap: None,
            galois: None,
            meter: OpMeter::default(),
        }
    }

    /// Products deeper than `cap` fail with [`HeError::DepthExceeded`].
    pub fn with_depth_cap(mut self, cap: u32) -> Self {
        self.depth_cap = Some(cap);
        self
    }

    /// Restricts substitution to the listed Galois elements.
    pub fn with_galois_elements(mut self, elements: impl IntoIterator<Item = usize>) -> Self {
        self.galois = Some(elements.into_iter().collect());
        self
    }

    pub fn depth_cap(&self) -> Option<u32> {
        self.depth_cap
    }

    /// Plaintext and the backend's counts at the time of the call.
    pub fn decrypt_with_meter(&self, c: &TransparentCt) -> (RingElement, OpCounts) {
        (c.value.clone(), self.meter.snapshot())
    }

    fn wrap(&self, value: RingElement, depth: u32) -> TransparentCt {
        TransparentCt { value, depth }
    }

    fn check(&self, c: &TransparentCt) -> Result<(), HeError> {
        if c.value.params() != self.params.plain_ring() {
            return Err(HeError::ParamMismatch);
        }
        Ok(())
    }
}

impl HeEvaluator for Transparent {
    type Ct = TransparentCt;

    fn params(&self) -> &HeParams {
        &self.params
    }

    fn meter(&self) -> &OpMeter {
        &self.meter
    }

    fn depth(&self, a: &TransparentCt) -> u32 {
        a.depth
    }

    fn add(&self, a: &TransparentCt, b: &TransparentCt) -> Result<TransparentCt, HeError> {
        self.check(a)?;
        self.check(b)?;
        self.meter.record_add();
        Ok(self.wrap(a.value.add(&b.value)?, a.depth.max(b.depth)))
    }

    fn sub(&self, a: &TransparentCt, b: &TransparentCt) -> Result<TransparentCt, HeError> {
        self.check(a)?;
        self.check(b)?;
        self.meter.record_add();
        Ok(self.wrap(a.value.sub(&b.value)?, a.depth.max(b.depth)))
    }

    fn negate(&self, a: &TransparentCt) -> Result<TransparentCt, HeError> {
        self.check(a)?;
        Ok(self.wrap(a.value.neg(), a.depth))
    }

    fn add_plain(&self, a: &TransparentCt, p: &RingElement) -> Result<TransparentCt, HeError> {
        self.check(a)?;
        self.params.check_plain(p)?;
        self.meter.record_add();
        Ok(self.wrap(a.value.add(p)?, a.depth))
    }

    fn plain_mul(&self, p: &RingElement, a: &TransparentCt) -> Result<TransparentCt, HeError> {
        self.check(a)?;
        self.params.check_plain(p)?;
        self.meter.record_plain_mul();
        Ok(self.wrap(p.mul(&a.value)?, a.depth))
    }

    fn mul(&self, a: &TransparentCt, b: &TransparentCt) -> Result<TransparentCt, HeError> {
        self.check(a)?;
        self.check(b)?;
        let depth = 1 + a.depth.max(b.depth);
        if let Some(cap) = self.depth_cap {
            if depth > cap {
                return Err(HeError::DepthExceeded { depth, cap });
            }
        }
        self.meter.record_mul();
        Ok(self.wrap(a.value.mul(&b.value)?, depth))
    }

    fn substitute(&self, a: &TransparentCt, g: usize) -> Result<TransparentCt, HeError> {
        self.check(a)?;
        let g = g % (2 * self.params.degree());
        if let Some(keys) = &self.galois {
            if !keys.contains(&g) {
                return Err(HeError::MissingGaloisKey(g));
            }
        }
        let value = a.value.automorphism(g)?;
        self.meter.record_substitute();
        Ok(self.wrap(value, a.depth))
    }

    fn monomial_mul(&self, a: &TransparentCt, e: i64) -> Result<TransparentCt, HeError> {
        self.check(a)?;
        self.meter.record_plain_mul();
        Ok(self.wrap(a.value.monomial_mul(e), a.depth))
    }
}

impl HeClient for Transparent {
    type Ct = TransparentCt;

    fn encrypt(&self, m: &RingElement) -> Result<TransparentCt, HeError> {
        self.params.check_plain(m)?;
        Ok(self.wrap(m.clone(), 0))
    }

    fn decrypt(&self, c: &TransparentCt) -> Result<RingElement, HeError> {
        self.check(c)?;
        Ok(c.value.clone())
    }
}
