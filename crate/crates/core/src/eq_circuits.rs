//! Homomorphic equality operators over bit-sliced, slot-batched operands.
//!
//! Every operator returns one ciphertext whose slot `s` decrypts to 1 when
//! slot `s` of the encrypted operand equals the reference and 0 otherwise.

use crate::cw_code::{CodeSpec, Codeword};
use crate::error::{EqError, HeError};
use crate::he::{BatchEncoder, HeClient, HeEvaluator};
use crate::ring::Modulus;

/// Ciphertext `j` holds bit `j` of every slot's element.
#[derive(Clone, Debug)]
pub struct BitSlicedBatch<C> {
    bits: Vec<C>,
}

impl<C> BitSlicedBatch<C> {
    pub fn new(bits: Vec<C>) -> Self {
        BitSlicedBatch { bits }
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[C] {
        &self.bits
    }
}

/// Encrypts up to `N` equal-width bit strings, one per slot.
pub fn encrypt_bitsliced<B: HeClient>(
    client: &B,
    encoder: &BatchEncoder,
    elements: &[Vec<bool>],
) -> Result<BitSlicedBatch<B::Ct>, HeError> {
    if elements.len() > encoder.slots() {
        return Err(HeError::TooManyValues {
            count: elements.len(),
            capacity: encoder.slots(),
        });
    }
    let width = elements.first().map_or(0, Vec::len);
    if elements.iter().any(|e| e.len() != width) {
        return Err(HeError::InvalidParams("elements differ in width".into()));
    }
    let bits = (0..width)
        .map(|j| {
            let slots: Vec<u64> = elements.iter().map(|e| e[j] as u64).collect();
            client.encrypt(&encoder.encode(&slots)?)
        })
        .collect::<Result<_, _>>()?;
    Ok(BitSlicedBatch::new(bits))
}

/// Slot values of a decrypted result.
pub fn decrypt_slots<B: HeClient>(
    client: &B,
    encoder: &BatchEncoder,
    ct: &B::Ct,
) -> Result<Vec<u64>, HeError> {
    encoder.decode(&client.decrypt(ct)?)
}

/// Balanced pairwise product: `len - 1` multiplications, depth `ceil(log2 len)`
/// above the deepest input.
pub fn product_tree<E: HeEvaluator>(eval: &E, mut level: Vec<E::Ct>) -> Result<E::Ct, HeError> {
    if level.is_empty() {
        return Err(HeError::InvalidParams("empty product".into()));
    }
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.chunks_exact(2);
        for pair in &mut it {
            next.push(eval.mul(&pair[0], &pair[1])?);
        }
        if let [last] = it.remainder() {
            next.push(last.clone());
        }
        level = next;
    }
    Ok(level.pop().unwrap())
}

fn check_width(a: usize, b: usize) -> Result<(), EqError> {
    if a != b {
        return Err(EqError::WidthMismatch(a, b));
    }
    Ok(())
}

/// `prod_{y_i = 0} (1 - x_i) * prod_{y_i = 1} x_i`.
pub fn plain_folklore_eq<E: HeEvaluator>(
    eval: &E,
    x: &BitSlicedBatch<E::Ct>,
    y: &[bool],
) -> Result<E::Ct, EqError> {
    check_width(x.width(), y.len())?;
    let factors = x
        .bits
        .iter()
        .zip(y)
        .map(|(xi, &yi)| {
            if yi {
                Ok(xi.clone())
            } else {
                eval.add_scalar(&eval.negate(xi)?, 1)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(product_tree(eval, factors)?)
}

/// `prod_i (1 - (x_i - y_i)^2)`.
pub fn arith_folklore_eq<E: HeEvaluator>(
    eval: &E,
    x: &BitSlicedBatch<E::Ct>,
    y: &BitSlicedBatch<E::Ct>,
) -> Result<E::Ct, EqError> {
    check_width(x.width(), y.width())?;
    let factors = x
        .bits
        .iter()
        .zip(&y.bits)
        .map(|(xi, yi)| {
            let d = eval.sub(xi, yi)?;
            let sq = eval.mul(&d, &d)?;
            eval.add_scalar(&eval.negate(&sq)?, 1)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(product_tree(eval, factors)?)
}

/// Product of the `k` ciphertexts selected by the set positions of `y`.
pub fn plain_cw_eq<E: HeEvaluator>(
    eval: &E,
    x: &BitSlicedBatch<E::Ct>,
    y: &Codeword,
    spec: &CodeSpec,
) -> Result<E::Ct, EqError> {
    check_width(x.width(), spec.length())?;
    if y.len() != spec.length() {
        return Err(crate::error::CodeError::WrongLength {
            expected: spec.length(),
            got: y.len(),
        }
        .into());
    }
    if y.weight() != spec.weight() {
        return Err(crate::error::CodeError::WrongWeight {
            expected: spec.weight(),
            got: y.weight(),
        }
        .into());
    }
    select_product(eval, x.bits(), y)
}

/// Product tree over the positions of `y`; the selection-vector kernel.
pub fn select_product<E: HeEvaluator>(
    eval: &E,
    bits: &[E::Ct],
    y: &Codeword,
) -> Result<E::Ct, EqError> {
    let chosen = y.positions().into_iter().map(|j| bits[j].clone()).collect();
    Ok(product_tree(eval, chosen)?)
}

/// `(1/k!) prod_{i < k} (<x, y> - i)`.
pub fn arith_cw_eq<E: HeEvaluator>(
    eval: &E,
    x: &BitSlicedBatch<E::Ct>,
    y: &BitSlicedBatch<E::Ct>,
    k: usize,
) -> Result<E::Ct, EqError> {
    check_width(x.width(), y.width())?;
    let t = eval.params().plain_modulus();
    if k == 0 || k as u64 >= t {
        return Err(EqError::FactorialNotInvertible { k, t });
    }
    let tm = Modulus::new(t);
    let fact = (1..=k as u64).fold(1, |acc, i| tm.mul(acc, i));
    let fact_inv = tm
        .inv(fact)
        .ok_or(EqError::FactorialNotInvertible { k, t })?;

    let mut inner: Option<E::Ct> = None;
    for (xi, yi) in x.bits.iter().zip(&y.bits) {
        let p = eval.mul(xi, yi)?;
        inner = Some(match inner {
            None => p,
            Some(acc) => eval.add(&acc, &p)?,
        });
    }
    let inner = inner.ok_or(EqError::WidthMismatch(0, 0))?;
    let factors = (0..k as u64)
        .map(|i| {
            if i == 0 {
                Ok(inner.clone())
            } else {
                eval.add_scalar(&inner, t - i)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let prod = product_tree(eval, factors)?;
    Ok(eval.plain_mul_scalar(fact_inv, &prod)?)
}

/// `ceil(log2 x)` for `x >= 1`.
pub fn ceil_log2(x: usize) -> u32 {
    assert!(x >= 1);
    usize::BITS - (x - 1).leading_zeros()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cw_code::perfect_map_u64;
    use crate::he::{HeParams, Transparent};

    fn setup(n: usize) -> (Transparent, BatchEncoder) {
        let be = Transparent::new(HeParams::new(n, 65537, 100.0).unwrap());
        let enc = BatchEncoder::new(be.params().plain_ring()).unwrap();
        (be, enc)
    }

    fn to_bits(v: u64, width: usize) -> Vec<bool> {
        (0..width).map(|i| v >> i & 1 == 1).collect()
    }

    #[test]
    fn ceil_log2_values() {
        let got: Vec<u32> = [1, 2, 3, 4, 5, 8, 9, 16, 17]
            .iter()
            .map(|&x| ceil_log2(x))
            .collect();
        assert_eq!(got, vec![0, 1, 2, 2, 3, 3, 4, 4, 5]);
    }

    #[test]
    fn folklore_exhaustive_l4() {
        let (be, enc) = setup(16);
        let xs: Vec<Vec<bool>> = (0..16).map(|v| to_bits(v, 4)).collect();
        let x = encrypt_bitsliced(&be, &enc, &xs).unwrap();
        for yv in 0..16u64 {
            let y = to_bits(yv, 4);
            let r = plain_folklore_eq(&be, &x, &y).unwrap();
            assert_eq!(r.depth(), 2);
            let slots = decrypt_slots(&be, &enc, &r).unwrap();
            let want: Vec<u64> = (0..16).map(|v| (v == yv) as u64).collect();
            assert_eq!(slots, want);
        }
    }

    #[test]
    fn arith_folklore_exhaustive_l3() {
        let (be, enc) = setup(64);
        let pairs: Vec<(u64, u64)> = (0..8).flat_map(|a| (0..8).map(move |b| (a, b))).collect();
        let xs: Vec<Vec<bool>> = pairs.iter().map(|&(a, _)| to_bits(a, 3)).collect();
        let ys: Vec<Vec<bool>> = pairs.iter().map(|&(_, b)| to_bits(b, 3)).collect();
        let x = encrypt_bitsliced(&be, &enc, &xs).unwrap();
        let y = encrypt_bitsliced(&be, &enc, &ys).unwrap();
        let before = be.meter().snapshot();
        let r = arith_folklore_eq(&be, &x, &y).unwrap();
        assert_eq!((be.meter().snapshot() - before).mul, 5);
        assert_eq!(r.depth(), 3);
        let slots = decrypt_slots(&be, &enc, &r).unwrap();
        let want: Vec<u64> = pairs.iter().map(|&(a, b)| (a == b) as u64).collect();
        assert_eq!(slots, want);
    }

    #[test]
    fn cw_operators_exhaustive() {
        let (be, enc) = setup(256);
        for &(m, k) in &[(6usize, 2usize), (5, 2), (6, 3)] {
            let spec = CodeSpec::new(m, k).unwrap();
            let words: Vec<Codeword> = (0..spec.capacity().to_string().parse::<u64>().unwrap())
                .map(|i| perfect_map_u64(i, &spec).unwrap())
                .collect();
            let xs: Vec<Vec<bool>> = words.iter().map(Codeword::bits).collect();
            let x = encrypt_bitsliced(&be, &enc, &xs).unwrap();
            for (yi, y) in words.iter().enumerate() {
                let want: Vec<u64> = (0..words.len()).map(|i| (i == yi) as u64).collect();
                let r = plain_cw_eq(&be, &x, y, &spec).unwrap();
                assert_eq!(r.depth(), ceil_log2(k));
                assert_eq!(
                    &decrypt_slots(&be, &enc, &r).unwrap()[..words.len()],
                    &want[..]
                );
                let ys = vec![y.bits(); words.len()];
                let yb = encrypt_bitsliced(&be, &enc, &ys).unwrap();
                let r = arith_cw_eq(&be, &x, &yb, k).unwrap();
                assert_eq!(r.depth(), 1 + ceil_log2(k));
                assert_eq!(
                    &decrypt_slots(&be, &enc, &r).unwrap()[..words.len()],
                    &want[..]
                );
            }
        }
    }

    #[test]
    fn inner_product_equals_weight_on_match() {
        let (be, enc) = setup(16);
        let y = Codeword::from_positions(5, &[1, 3]);
        let x = encrypt_bitsliced(&be, &enc, &[y.bits()]).unwrap();
        let mut acc = be.mul(&x.bits()[0], &x.bits()[0]).unwrap();
        for b in &x.bits()[1..] {
            acc = be.add(&acc, &be.mul(b, b).unwrap()).unwrap();
        }
        assert_eq!(decrypt_slots(&be, &enc, &acc).unwrap()[0], 2);
    }

    #[test]
    fn rejects_bad_operands() {
        let (be, enc) = setup(16);
        let x = encrypt_bitsliced(&be, &enc, &[vec![true, false, true]]).unwrap();
        assert_eq!(
            plain_folklore_eq(&be, &x, &[true]).unwrap_err(),
            EqError::WidthMismatch(3, 1)
        );
        let spec = CodeSpec::new(3, 2).unwrap();
        assert!(plain_cw_eq(&be, &x, &Codeword::from_positions(3, &[0]), &spec).is_err());
        let small = Transparent::new(HeParams::new(16, 3, 10.0).unwrap());
        let enc3 = BatchEncoder::new(small.params().plain_ring());
        assert!(enc3.is_err());
        let xs = BitSlicedBatch::new(vec![small.encrypt(&small.params().constant(1)).unwrap(); 3]);
        assert_eq!(
            arith_cw_eq(&small, &xs, &xs, 3).unwrap_err(),
            EqError::FactorialNotInvertible { k: 3, t: 3 }
        );
    }

    #[test]
    fn slot_independence() {
        let (be, enc) = setup(16);
        let spec = CodeSpec::new(6, 2).unwrap();
        let y = perfect_map_u64(4, &spec).unwrap();
        let mut xs: Vec<Vec<bool>> = (0..15)
            .map(|i| perfect_map_u64(i, &spec).unwrap().bits())
            .collect();
        let base = decrypt_slots(
            &be,
            &enc,
            &plain_cw_eq(&be, &encrypt_bitsliced(&be, &enc, &xs).unwrap(), &y, &spec).unwrap(),
        )
        .unwrap();
        xs[4] = perfect_map_u64(9, &spec).unwrap().bits();
        let changed = decrypt_slots(
            &be,
            &enc,
            &plain_cw_eq(&be, &encrypt_bitsliced(&be, &enc, &xs).unwrap(), &y, &spec).unwrap(),
        )
        .unwrap();
        for s in 0..16 {
            assert_eq!(base[s] != changed[s], s == 4);
        }
    }
}
