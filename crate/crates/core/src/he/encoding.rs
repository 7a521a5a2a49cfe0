use crate::error::HeError;
use crate::ring::{RingElement, RingParams};

/// SIMD slot encoding of `R_t` through the negacyclic NTT mod `t`.
///
/// Slot `i` is the evaluation at the `i`-th root in transform order, so ring
/// addition and multiplication act slot-wise.
#[derive(Clone, Debug)]
pub struct BatchEncoder {
    plain: RingParams,
}

impl BatchEncoder {
    pub fn new(plain: &RingParams) -> Result<Self, HeError> {
        if !plain.ntt_enabled() {
            return Err(HeError::BatchingUnsupported);
        }
        Ok(BatchEncoder {
            plain: plain.clone(),
        })
    }

    pub fn slots(&self) -> usize {
        self.plain.degree()
    }

    /// Missing trailing slots are zero.
    pub fn encode(&self, values: &[u64]) -> Result<RingElement, HeError> {
        let n = self.slots();
        if values.len() > n {
            return Err(HeError::TooManyValues {
                count: values.len(),
                capacity: n,
            });
        }
        let t = self.plain.modulus();
        if let Some(&v) = values.iter().find(|&&v| v >= t) {
            return Err(HeError::ValueOutOfRange {
                value: v,
                modulus: t,
            });
        }
        let mut slots = values.to_vec();
        slots.resize(n, 0);
        Ok(RingElement::inverse_ntt(&self.plain, slots)?)
    }

    pub fn decode(&self, p: &RingElement) -> Result<Vec<u64>, HeError> {
        if p.params() != &self.plain {
            return Err(HeError::PlaintextNotReduced);
        }
        Ok(p.forward_ntt()?)
    }
}

/// Places `chunks[j]` at coefficient `j`.
pub fn coeff_encode(plain: &RingParams, chunks: &[u64]) -> Result<RingElement, HeError> {
    let n = plain.degree();
    if chunks.len() > n {
        return Err(HeError::TooManyValues {
            count: chunks.len(),
            capacity: n,
        });
    }
    let mut coeffs = chunks.to_vec();
    coeffs.resize(n, 0);
    RingElement::from_coeffs(plain, coeffs).map_err(|_| {
        let t = plain.modulus();
        let v = *chunks.iter().find(|&&c| c >= t).unwrap();
        HeError::ValueOutOfRange {
            value: v,
            modulus: t,
        }
    })
}

pub fn coeff_decode(p: &RingElement) -> Vec<u64> {
    p.coeffs().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn plain() -> RingParams {
        RingParams::new(64, 65537).unwrap()
    }

    proptest! {
        #[test]
        fn batch_is_slotwise(u in proptest::collection::vec(0u64..65537, 64), v in proptest::collection::vec(0u64..65537, 64)) {
            let enc = BatchEncoder::new(&plain()).unwrap();
            let (a, b) = (enc.encode(&u).unwrap(), enc.encode(&v).unwrap());
            prop_assert_eq!(enc.decode(&a).unwrap(), u.clone());
            let sum: Vec<u64> = u.iter().zip(&v).map(|(x, y)| (x + y) % 65537).collect();
            prop_assert_eq!(enc.decode(&a.add(&b).unwrap()).unwrap(), sum);
            let prod: Vec<u64> = u.iter().zip(&v).map(|(x, y)| x * y % 65537).collect();
            prop_assert_eq!(enc.decode(&a.schoolbook_mul(&b).unwrap()).unwrap(), prod);
        }

        #[test]
        fn coeff_round_trip(c in proptest::collection::vec(0u64..65537, 0..64)) {
            let p = coeff_encode(&plain(), &c).unwrap();
            let mut back = coeff_decode(&p);
            back.truncate(c.len());
            prop_assert_eq!(back, c);
        }
    }

    #[test]
    fn encoding_edges() {
        let p = plain();
        assert_eq!(
            coeff_encode(&p, &[1]).unwrap(),
            RingElement::constant(&p, 1)
        );
        assert!(coeff_encode(&p, &[]).unwrap().is_zero());
        assert!(coeff_encode(&p, &[65537]).is_err());
        assert!(coeff_encode(&p, &[0; 65]).is_err());
        assert!(BatchEncoder::new(&RingParams::new(64, 97).unwrap()).is_err());
        let enc = BatchEncoder::new(&p).unwrap();
        assert!(enc.encode(&[0; 65]).is_err());
        assert_eq!(
            enc.decode(&RingElement::constant(&p, 5)).unwrap(),
            vec![5; 64]
        );
    }
}
