//! Word-sized modular arithmetic with Barrett and Shoup reduction.

/// Largest supported modulus width in bits.
pub const MAX_MODULUS_BITS: u32 = 62;

/// An odd modulus `p < 2^62` with precomputed Barrett constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Modulus {
    value: u64,
    // floor(2^128 / p) as (low, high) words
    ratio: [u64; 2],
}

impl Modulus {
    /// Panics unless `1 < p < 2^62`.
    pub fn new(value: u64) -> Self {
        assert!(
            value > 1 && value < (1u64 << MAX_MODULUS_BITS),
            "modulus out of range"
        );
        let r = u128::MAX / value as u128;
        // u128::MAX / p equals floor(2^128 / p) unless p divides 2^128, impossible for p > 1 odd;
        // for even p the Barrett bound still holds within one subtraction.
        Modulus {
            value,
            ratio: [r as u64, (r >> 64) as u64],
        }
    }

    #[inline(always)]
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn bits(&self) -> u32 {
        64 - self.value.leading_zeros()
    }

    #[inline(always)]
    pub fn reduce(&self, x: u64) -> u64 {
        self.reduce_u128(x as u128)
    }

    /// `z mod p` for any 128-bit `z`.
    #[inline(always)]
    pub fn reduce_u128(&self, z: u128) -> u64 {
        let z0 = z as u64;
        let z1 = (z >> 64) as u64;
        let [r0, r1] = self.ratio;
        let carry = ((z0 as u128 * r0 as u128) >> 64) as u64;
        let t = z0 as u128 * r1 as u128 + carry as u128;
        let (t_lo, t_hi) = (t as u64, (t >> 64) as u64);
        let u = z1 as u128 * r0 as u128 + t_lo as u128;
        let q = z1
            .wrapping_mul(r1)
            .wrapping_add(t_hi)
            .wrapping_add((u >> 64) as u64);
        let mut r = z0.wrapping_sub(q.wrapping_mul(self.value));
        while r >= self.value {
            r -= self.value;
        }
        r
    }

    #[inline(always)]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.value {
            s - self.value
        } else {
            s
        }
    }

    #[inline(always)]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.value - b
        }
    }

    #[inline(always)]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.value - a
        }
    }

    #[inline(always)]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce_u128(a as u128 * b as u128)
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        base = self.reduce(base);
        let mut acc = 1 % self.value;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Inverse via extended Euclid; `None` when `gcd(a, p) != 1`.
    pub fn inv(&self, a: u64) -> Option<u64> {
        let (mut r0, mut r1) = (self.value as i128, self.reduce(a) as i128);
        let (mut s0, mut s1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (s0, s1) = (s1, s0 - q * s1);
        }
        if r0 != 1 {
            return None;
        }
        Some(s0.rem_euclid(self.value as i128) as u64)
    }

    /// Reduces a signed integer into `[0, p)`.
    #[inline]
    pub fn from_i64(&self, x: i64) -> u64 {
        if x >= 0 {
            self.reduce(x as u64)
        } else {
            self.neg(self.reduce(x.unsigned_abs()))
        }
    }

    /// Centered representative in `(-p/2, p/2]`.
    #[inline]
    pub fn center(&self, x: u64) -> i64 {
        if x > self.value / 2 {
            x as i64 - self.value as i64
        } else {
            x as i64
        }
    }

    pub fn shoup(&self, w: u64) -> ShoupConst {
        debug_assert!(w < self.value);
        ShoupConst {
            w,
            w_shoup: (((w as u128) << 64) / self.value as u128) as u64,
        }
    }

    /// `x * w mod p` in `[0, 2p)` for any `x < 2^64`.
    #[inline(always)]
    pub fn mul_shoup_lazy(&self, x: u64, c: ShoupConst) -> u64 {
        let q = ((x as u128 * c.w_shoup as u128) >> 64) as u64;
        x.wrapping_mul(c.w).wrapping_sub(q.wrapping_mul(self.value))
    }

    #[inline(always)]
    pub fn mul_shoup(&self, x: u64, c: ShoupConst) -> u64 {
        let r = self.mul_shoup_lazy(x, c);
        if r >= self.value {
            r - self.value
        } else {
            r
        }
    }
}

/// A fixed multiplicand with its Shoup companion `floor(w * 2^64 / p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ShoupConst {
    pub w: u64,
    pub w_shoup: u64,
}
