//! Deterministic primality testing and NTT-friendly prime search.

use super::modulus::Modulus;

/// Miller-Rabin with a base set that is exact for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in SMALL {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    let mul = |a: u64, b: u64| (a as u128 * b as u128 % n as u128) as u64;
    let pow = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul(acc, b);
            }
            b = mul(b, b);
            e >>= 1;
        }
        acc
    };
    'witness: for a in SMALL {
        let mut x = pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// The `count` largest primes below `2^bits` that are `1 mod step`, excluding `exclude`.
///
/// Returns fewer than `count` primes only if the range is exhausted.
pub fn primes_congruent_one(bits: u32, step: u64, count: usize, exclude: &[u64]) -> Vec<u64> {
    assert!(bits <= 62 && step.is_power_of_two());
    let mut out = Vec::with_capacity(count);
    let mut candidate = ((1u64 << bits) - 1) / step * step + 1;
    if candidate >= 1u64 << bits {
        candidate -= step;
    }
    while out.len() < count && candidate > step {
        if is_prime(candidate) && !exclude.contains(&candidate) {
            out.push(candidate);
        }
        candidate -= step;
    }
    out
}

/// A primitive `order`-th root of unity mod `p`; `order` must be a power of two dividing `p - 1`.
pub fn primitive_root_of_unity(p: u64, order: u64) -> Option<u64> {
    if !order.is_power_of_two() || !(p - 1).is_multiple_of(order) || !is_prime(p) {
        return None;
    }
    let m = Modulus::new(p);
    let cofactor = (p - 1) / order;
    (2..p.min(1 << 20))
        .map(|x| m.pow(x, cofactor))
        .find(|&r| order == 1 || m.pow(r, order / 2) == p - 1)
}
