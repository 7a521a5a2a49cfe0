//! Oblivious query expansion: unpacks coefficient-packed ciphertexts into one
//! ciphertext per coefficient.

use crate::error::{HeError, PirError};
use crate::he::HeEvaluator;
use crate::ring::Modulus;

/// `h = ceil(m / 2^c)` ciphertexts, each packing `2^c` scaled bits.
#[derive(Clone, Debug)]
pub struct PackedQuery<C> {
    pub cts: Vec<C>,
    pub c: u32,
    pub m: usize,
}

impl<C> PackedQuery<C> {
    pub fn upload_count(m: usize, c: u32) -> usize {
        m.div_ceil(1 << c)
    }
}

/// `m` ciphertexts; entry `j` encrypts the constant bit `j`.
#[derive(Clone, Debug)]
pub struct ExpandedQuery<C> {
    pub cts: Vec<C>,
}

fn check_c<E: HeEvaluator>(eval: &E, c: u32) -> Result<(), PirError> {
    let max = eval.params().degree().trailing_zeros();
    if c > max {
        return Err(PirError::CompressionOutOfRange { c, max });
    }
    Ok(())
}

/// Expands each packed ciphertext into `2^c` outputs, concatenates them in
/// order and keeps the first `m`.
///
/// Each level `a` costs one substitution by `N/2^a + 1` and two monomial
/// multiplications per node. The `2^-c` factor is applied at query time.
pub fn expand<E: HeEvaluator>(
    eval: &E,
    pq: &PackedQuery<E::Ct>,
) -> Result<ExpandedQuery<E::Ct>, PirError> {
    check_c(eval, pq.c)?;
    if pq.cts.len() != PackedQuery::<E::Ct>::upload_count(pq.m, pq.c) {
        return Err(PirError::WrongCiphertextCount {
            expected: PackedQuery::<E::Ct>::upload_count(pq.m, pq.c),
            got: pq.cts.len(),
        });
    }
    let mut out = Vec::with_capacity(pq.cts.len() << pq.c);
    for ct in &pq.cts {
        out.extend(expand_one(eval, ct, pq.c)?);
    }
    out.truncate(pq.m);
    Ok(ExpandedQuery { cts: out })
}

fn expand_one<E: HeEvaluator>(eval: &E, ct: &E::Ct, c: u32) -> Result<Vec<E::Ct>, HeError> {
    let n = eval.params().degree();
    let mut cts = vec![ct.clone()];
    for a in 0..c {
        let half = 1usize << a;
        let g = n / half + 1;
        let shift = -(half as i64);
        let level: Vec<(E::Ct, E::Ct)> = crate::par::map(&cts, |cb| {
            let c0 = eval.substitute(cb, g)?;
            let c1 = eval.monomial_mul(&c0, shift)?;
            let hi = eval.monomial_mul(cb, shift)?;
            Ok::<_, HeError>((eval.add(cb, &c0)?, eval.sub(&hi, &c1)?))
        })?;
        let (lo, hi): (Vec<_>, Vec<_>) = level.into_iter().unzip();
        cts = lo;
        cts.extend(hi);
    }
    Ok(cts)
}

/// Reference expansion of one unscaled ciphertext, finishing with a plaintext
/// multiplication by `2^-c mod t`.
pub fn expand_sealpir_reference<E: HeEvaluator>(
    eval: &E,
    ct: &E::Ct,
    c: u32,
) -> Result<Vec<E::Ct>, PirError> {
    check_c(eval, c)?;
    let n = eval.params().degree();
    let t = Modulus::new(eval.params().plain_modulus());
    let mut cts = vec![ct.clone()];
    for a in 0..c {
        let half = 1usize << a;
        let g = n / half + 1;
        let mut next = cts.clone();
        next.extend(cts.iter().cloned());
        for b in 0..half {
            let c0 = cts[b].clone();
            let c1 = eval.monomial_mul(&c0, -(half as i64))?;
            next[b] = eval.add(&c0, &eval.substitute(&c0, g)?)?;
            next[b + half] = eval.add(&c1, &eval.substitute(&c1, g)?)?;
        }
        cts = next;
    }
    let inv = t
        .inv(t.pow(2, c as u64))
        .ok_or(HeError::InvalidParams("2 is not invertible mod t".into()))?;
    Ok(cts
        .iter()
        .map(|x| eval.plain_mul_scalar(inv, x))
        .collect::<Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::he::{HeClient, HeParams, Transparent};
    use crate::ring::RingElement;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn backend(n: usize) -> Transparent {
        Transparent::new(HeParams::new(n, 65537, 100.0).unwrap())
    }

    fn scaled(be: &Transparent, bits: &[u64], c: u32) -> RingElement {
        let t = Modulus::new(be.params().plain_modulus());
        let inv = t.inv(t.pow(2, c as u64)).unwrap();
        let coeffs: Vec<u64> = bits.iter().map(|&b| t.mul(b, inv)).collect();
        crate::he::coeff_encode(be.params().plain_ring(), &coeffs).unwrap()
    }

    #[test]
    fn recovers_bits_and_counts() {
        let be = backend(16);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for c in 0..=4u32 {
            let bits: Vec<u64> = (0..1 << c).map(|_| rng.random_range(0..2)).collect();
            let ct = be.encrypt(&scaled(&be, &bits, c)).unwrap();
            let before = be.meter().snapshot();
            let out = expand(
                &be,
                &PackedQuery {
                    cts: vec![ct.clone()],
                    c,
                    m: 1 << c,
                },
            )
            .unwrap();
            let used = be.meter().snapshot() - before;
            assert_eq!(used.substitute, (1 << c) - 1);
            assert_eq!(used.plain_mul, 2 * ((1 << c) - 1));
            for (j, o) in out.cts.iter().enumerate() {
                assert_eq!(
                    be.decrypt(o).unwrap(),
                    be.params().constant(bits[j]),
                    "c={c} j={j}"
                );
            }
            if c == 0 {
                assert_eq!(out.cts[0], ct);
            }
        }
    }

    #[test]
    fn truncates_and_validates() {
        let be = backend(16);
        let bits = [1, 0, 1, 1, 0, 0, 0, 0];
        let ct = be.encrypt(&scaled(&be, &bits, 3)).unwrap();
        let out = expand(
            &be,
            &PackedQuery {
                cts: vec![ct.clone(), ct.clone()],
                c: 3,
                m: 13,
            },
        )
        .unwrap();
        assert_eq!(out.cts.len(), 13);
        assert_eq!(be.decrypt(&out.cts[11]).unwrap(), be.params().constant(1));
        assert!(expand(
            &be,
            &PackedQuery {
                cts: vec![ct.clone()],
                c: 3,
                m: 13
            }
        )
        .is_err());
        assert!(expand(
            &be,
            &PackedQuery {
                cts: vec![ct.clone()],
                c: 5,
                m: 1
            }
        )
        .is_err());
        let keyed = backend(16).with_galois_elements([17]);
        let ct = keyed.encrypt(&scaled(&keyed, &bits, 2)).unwrap();
        assert!(matches!(
            expand(
                &keyed,
                &PackedQuery {
                    cts: vec![ct],
                    c: 2,
                    m: 4
                }
            ),
            Err(PirError::He(HeError::MissingGaloisKey(9)))
        ));
    }

    #[test]
    fn matches_reference_exhaustive_single_bits_n64() {
        let be = backend(64);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for c in 0..=6u32 {
            let len = 1usize << c;
            let mut patterns: Vec<Vec<u64>> = (0..len)
                .map(|j| (0..len).map(|i| (i == j) as u64).collect())
                .collect();
            patterns.extend((0..200).map(|_| (0..len).map(|_| rng.random_range(0..2)).collect()));
            for bits in patterns {
                let ours = expand(
                    &be,
                    &PackedQuery {
                        cts: vec![be.encrypt(&scaled(&be, &bits, c)).unwrap()],
                        c,
                        m: len,
                    },
                )
                .unwrap();
                let plain = crate::he::coeff_encode(be.params().plain_ring(), &bits).unwrap();
                let reference =
                    expand_sealpir_reference(&be, &be.encrypt(&plain).unwrap(), c).unwrap();
                for (a, b) in ours.cts.iter().zip(&reference) {
                    assert_eq!(be.decrypt(a).unwrap(), be.decrypt(b).unwrap());
                }
            }
        }
    }

    #[test]
    fn linear_in_input() {
        let be = backend(16);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let plain = be.params().plain_ring().clone();
        let draw = |rng: &mut ChaCha8Rng| {
            RingElement::from_coeffs(
                &plain,
                (0..16).map(|_| rng.random_range(0..65537)).collect(),
            )
            .unwrap()
        };
        let (a, b) = (draw(&mut rng), draw(&mut rng));
        let run = |m: &RingElement| {
            expand(
                &be,
                &PackedQuery {
                    cts: vec![be.encrypt(m).unwrap()],
                    c: 3,
                    m: 8,
                },
            )
            .unwrap()
            .cts
        };
        let (ea, eb, es) = (run(&a), run(&b), run(&a.add(&b).unwrap()));
        for i in 0..8 {
            assert_eq!(es[i].value(), &ea[i].value().add(eb[i].value()).unwrap());
        }
    }

    #[test]
    fn substitution_monomial_identity() {
        let be = backend(64);
        let plain = be.params().plain_ring().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for a in 0..6u32 {
            let m = RingElement::from_coeffs(
                &plain,
                (0..64).map(|_| rng.random_range(0..65537)).collect(),
            )
            .unwrap();
            let g = 64 / (1 << a) + 1;
            let s = -(1i64 << a);
            let lhs = m.monomial_mul(s).automorphism(g).unwrap();
            let rhs = m.automorphism(g).unwrap().monomial_mul(s).neg();
            assert_eq!(lhs, rhs);
        }
    }
}
