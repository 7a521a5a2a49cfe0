//! Constant-weight codes: minimal length, the order-preserving perfect
//! mapping from integers, its inverse, and a hash-based lossy mapping.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use sha2::{Digest, Sha256};

use crate::error::CodeError;

/// `C(m, k)` by the multiplicative formula.
pub fn binomial(m: usize, k: usize) -> BigUint {
    if k > m {
        return BigUint::zero();
    }
    let k = k.min(m - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= m - i;
        acc /= i + 1;
    }
    acc
}

/// Smallest `m` with `C(m, k) >= n`.
pub fn min_code_length(n: &BigUint, k: usize) -> usize {
    assert!(k >= 1, "weight must be positive");
    if *n <= BigUint::one() {
        return k;
    }
    let fits = |m: usize| binomial(m, k) >= *n;
    let mut lo = k;
    let mut hi = 2 * k;
    while !fits(hi) {
        lo = hi;
        hi *= 2;
    }
    // invariant: !fits(lo) && fits(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Distinct code shapes kept before the table cache is flushed.
const TABLE_CACHE_LIMIT: usize = 64;

type TableCache = HashMap<(usize, usize), Arc<BinomialTable>>;

/// Pascal entries `C(i, h)` for `i < m`, restricted to the band
/// `i + k + 1 - m <= h <= min(k, i)` that mapping and unmapping visit:
/// at most `min(k + 1, m - k)` entries per row.
#[derive(Debug)]
struct BinomialTable {
    m: usize,
    k: usize,
    offsets: Vec<usize>,
    entries: Vec<BigUint>,
    capacity: BigUint,
    zero: BigUint,
}

impl BinomialTable {
    fn build(m: usize, k: usize) -> Self {
        let mut table = BinomialTable {
            m,
            k,
            offsets: Vec::with_capacity(m + 1),
            entries: Vec::new(),
            capacity: binomial(m, k),
            zero: BigUint::zero(),
        };
        for i in 0..m {
            table.offsets.push(table.entries.len());
            for h in table.low(i)..=k.min(i) {
                let c = if h == 0 {
                    BigUint::one()
                } else {
                    // low(i - 1) <= h - 1, so both terms lie in row i - 1's band
                    table.get(i - 1, h - 1) + table.get(i - 1, h)
                };
                table.entries.push(c);
            }
        }
        table.offsets.push(table.entries.len());
        table
    }

    fn low(&self, i: usize) -> usize {
        (i + self.k + 1).saturating_sub(self.m)
    }

    fn get(&self, i: usize, h: usize) -> &BigUint {
        if h > i.min(self.k) {
            return &self.zero;
        }
        let low = self.low(i);
        debug_assert!(i < self.m && h >= low, "C({i}, {h}) outside the band");
        &self.entries[self.offsets[i] + h - low]
    }

    fn cached(m: usize, k: usize) -> Arc<BinomialTable> {
        static CACHE: OnceLock<Mutex<TableCache>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(t) = cache.lock().unwrap().get(&(m, k)) {
            return t.clone();
        }
        let table = Arc::new(BinomialTable::build(m, k));
        let mut cache = cache.lock().unwrap();
        if cache.len() >= TABLE_CACHE_LIMIT {
            cache.clear();
        }
        cache.entry((m, k)).or_insert(table).clone()
    }
}

/// Parameters of `CW(m, k)`.
#[derive(Clone)]
pub struct CodeSpec {
    m: usize,
    k: usize,
    table: Arc<BinomialTable>,
}

impl fmt::Debug for CodeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CW({}, {})", self.m, self.k)
    }
}

impl PartialEq for CodeSpec {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m && self.k == other.k
    }
}

impl Eq for CodeSpec {}

impl CodeSpec {
    pub fn new(m: usize, k: usize) -> Result<Self, CodeError> {
        if k == 0 || k > m {
            return Err(CodeError::InvalidSpec { m, k });
        }
        Ok(CodeSpec {
            m,
            k,
            table: BinomialTable::cached(m, k),
        })
    }

    /// Shortest code of weight `k` with capacity at least `n`.
    pub fn for_domain(n: &BigUint, k: usize) -> Result<Self, CodeError> {
        if k == 0 {
            return Err(CodeError::InvalidSpec { m: 0, k });
        }
        Self::new(min_code_length(n, k), k)
    }

    pub fn length(&self) -> usize {
        self.m
    }

    pub fn weight(&self) -> usize {
        self.k
    }

    pub fn capacity(&self) -> &BigUint {
        &self.table.capacity
    }

    fn check(&self, y: &Codeword) -> Result<(), CodeError> {
        if y.len() != self.m {
            return Err(CodeError::WrongLength {
                expected: self.m,
                got: y.len(),
            });
        }
        if y.weight() != self.k {
            return Err(CodeError::WrongWeight {
                expected: self.k,
                got: y.weight(),
            });
        }
        Ok(())
    }
}

/// An `m`-bit string; bit `i` is position `i` (least significant first).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Codeword {
    len: usize,
    words: Vec<u64>,
}

impl fmt::Debug for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len)
            .rev()
            .map(|i| if self.bit(i) { '1' } else { '0' })
            .collect();
        write!(f, "Codeword({s})")
    }
}

impl Codeword {
    pub fn zeros(len: usize) -> Self {
        Codeword {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_positions(len: usize, positions: &[usize]) -> Self {
        let mut c = Self::zeros(len);
        for &p in positions {
            c.set(p);
        }
        c
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut c = Self::zeros(bits.len());
        for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
            c.set(i);
        }
        c
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn set(&mut self, i: usize) {
        assert!(i < self.len, "position {i} outside length {}", self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Set positions in increasing order.
    pub fn positions(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.bit(i)).collect()
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.bit(i)).collect()
    }

    /// The bit string read as an unsigned integer.
    pub fn to_biguint(&self) -> BigUint {
        BigUint::from_slice(
            &self
                .words
                .iter()
                .flat_map(|&w| [w as u32, (w >> 32) as u32])
                .collect::<Vec<_>>(),
        )
    }
}

/// Work done by one mapping call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MapStats {
    pub iterations: usize,
    pub bit_sets: usize,
}

/// Rank-to-codeword bijection `[C(m, k)] -> CW(m, k)`, increasing in value.
pub fn perfect_map(x: &BigUint, spec: &CodeSpec) -> Result<Codeword, CodeError> {
    perfect_map_with_stats(x, spec).map(|(c, _)| c)
}

pub fn perfect_map_with_stats(
    x: &BigUint,
    spec: &CodeSpec,
) -> Result<(Codeword, MapStats), CodeError> {
    if x >= spec.capacity() {
        return Err(CodeError::OutOfRange);
    }
    let mut y = Codeword::zeros(spec.m);
    let mut stats = MapStats::default();
    let mut r = x.clone();
    let mut h = spec.k;
    for pos in (0..spec.m).rev() {
        stats.iterations += 1;
        let c = spec.table.get(pos, h);
        if r >= *c {
            y.set(pos);
            stats.bit_sets += 1;
            r -= c;
            h -= 1;
            if h == 0 {
                break;
            }
        }
    }
    debug_assert!(r.is_zero() && h == 0);
    Ok((y, stats))
}

pub fn perfect_map_u64(x: u64, spec: &CodeSpec) -> Result<Codeword, CodeError> {
    perfect_map(&BigUint::from(x), spec)
}

/// Inverse of [`perfect_map`].
pub fn perfect_unmap(y: &Codeword, spec: &CodeSpec) -> Result<BigUint, CodeError> {
    spec.check(y)?;
    let mut x = BigUint::zero();
    let mut h = 1;
    for pos in 0..spec.m {
        if y.bit(pos) {
            x += spec.table.get(pos, h);
            h += 1;
        }
    }
    Ok(x)
}

/// Draw `H_i(x)`, `i = 1, 2, ...` until `k` distinct positions are set.
pub fn lossy_map(x: &[u8], spec: &CodeSpec, seed: &[u8; 32]) -> Result<Codeword, CodeError> {
    let limit = 64 * spec.m;
    let mut y = Codeword::zeros(spec.m);
    let mut found = 0;
    for i in 1..=limit as u64 {
        let pos = lossy_hash(seed, i, x, spec.m);
        if !y.bit(pos) {
            y.set(pos);
            found += 1;
            if found == spec.k {
                return Ok(y);
            }
        }
    }
    Err(CodeError::DrawLimit {
        found,
        k: spec.k,
        draws: limit,
    })
}

fn lossy_hash(seed: &[u8; 32], i: u64, x: &[u8], m: usize) -> usize {
    let digest = Sha256::new()
        .chain_update(seed)
        .chain_update(i.to_le_bytes())
        .chain_update(x)
        .finalize();
    let word = u64::from_le_bytes(digest[..8].try_into().unwrap());
    (word % m as u64) as usize
}
