use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use super::rns::RnsBasis;
use crate::error::HeError;
use crate::he::HeParams;
use crate::ring::{primes_congruent_one, Modulus, ShoupConst};

/// Largest number of products one fused inner product accumulates before rescaling.
pub(crate) const FUSED_TERMS: usize = 1 << 20;

const AUX_PRIME_BITS: u32 = 61;

/// Named parameter sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamPreset {
    Toy1024,
    Paper4096,
    Paper8192,
    Paper16384,
}

impl ParamPreset {
    pub const ALL: [ParamPreset; 4] = [
        ParamPreset::Toy1024,
        ParamPreset::Paper4096,
        ParamPreset::Paper8192,
        ParamPreset::Paper16384,
    ];

    pub fn id(self) -> u8 {
        match self {
            ParamPreset::Toy1024 => 1,
            ParamPreset::Paper4096 => 2,
            ParamPreset::Paper8192 => 3,
            ParamPreset::Paper16384 => 4,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.id() == id)
    }

    pub fn name(self) -> &'static str {
        match self {
            ParamPreset::Toy1024 => "toy-1024",
            ParamPreset::Paper4096 => "paper-4096",
            ParamPreset::Paper8192 => "paper-8192",
            ParamPreset::Paper16384 => "paper-16384",
        }
    }

    pub fn degree(self) -> usize {
        match self {
            ParamPreset::Toy1024 => 1024,
            ParamPreset::Paper4096 => 4096,
            ParamPreset::Paper8192 => 8192,
            ParamPreset::Paper16384 => 16384,
        }
    }

    pub fn plain_modulus(self) -> u64 {
        match self {
            ParamPreset::Toy1024 => 12289,
            _ => 65537,
        }
    }

    /// Bit sizes of the ciphertext-modulus primes.
    pub fn prime_bits(self) -> &'static [u32] {
        match self {
            ParamPreset::Toy1024 => &[50, 50],
            ParamPreset::Paper4096 => &[54, 54],
            ParamPreset::Paper8192 => &[54, 54, 54, 54],
            ParamPreset::Paper16384 => &[54, 54, 54, 54, 54, 54, 54, 54],
        }
    }

    /// Key-switching digit width in bits.
    pub fn decomposition_bits(self) -> u32 {
        match self {
            ParamPreset::Toy1024 | ParamPreset::Paper4096 => 16,
            ParamPreset::Paper8192 | ParamPreset::Paper16384 => 54,
        }
    }

    /// Largest depth of a balanced product of fresh ciphertexts that keeps
    /// at least 20 bits of noise budget (measured, not derived).
    pub fn depth_budget(self) -> u32 {
        match self {
            ParamPreset::Toy1024 => 2,
            ParamPreset::Paper4096 => 2,
            ParamPreset::Paper8192 => 5,
            ParamPreset::Paper16384 => 12,
        }
    }

    /// Selection-tree depth supported after expansion and before the
    /// plaintext inner product.
    pub fn pir_depth_budget(self) -> u32 {
        match self {
            ParamPreset::Toy1024 => 1,
            ParamPreset::Paper4096 => 1,
            ParamPreset::Paper8192 => 2,
            ParamPreset::Paper16384 => 4,
        }
    }

    /// Shared parameters, built once per process.
    pub fn params(self) -> BfvParams {
        static CACHE: [OnceLock<BfvParams>; 4] = [
            OnceLock::new(),
            OnceLock::new(),
            OnceLock::new(),
            OnceLock::new(),
        ];
        CACHE[self.id() as usize - 1]
            .get_or_init(|| {
                BfvParams::new(
                    self.degree(),
                    self.plain_modulus(),
                    self.prime_bits(),
                    self.decomposition_bits(),
                    self.id(),
                )
                .expect("preset parameters are valid")
            })
            .clone()
    }
}

impl fmt::Display for ParamPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParamPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown preset {s:?}"))
    }
}

#[derive(Debug)]
pub(crate) struct Inner {
    pub id: u8,
    pub n: usize,
    pub t: Modulus,
    pub he: HeParams,
    pub q: RnsBasis,
    /// `Q` primes followed by the auxiliary primes.
    pub qp: RnsBasis,
    pub sigma: f64,
    pub w: u32,
    /// Digits per `Q` prime.
    pub digits: Vec<usize>,
    pub delta: Vec<ShoupConst>,
    pub t_mod_q: Vec<ShoupConst>,
    pub tp_mod_q: Vec<u64>,
    pub q_hat_inv: Vec<ShoupConst>,
    pub q_hat: Vec<u64>,
    /// `[j][i]`: `(p_0 ... p_{i-1}) mod q_j`.
    pub p_prefix_mod_q: Vec<Vec<ShoupConst>>,
    /// `[j][i]`: `(q_0 ... q_{i-1}) mod p_j`.
    pub q_prefix_mod_p: Vec<Vec<ShoupConst>>,
    pub q_mod_p: Vec<u64>,
    /// `q_{L-1} q_{L-2}` (or `q_0` when `L = 1`).
    pub top_den: u128,
    pub q_bits: u64,
    pub q_limbs: Vec<u64>,
}

/// Parameters of the RNS BFV scheme; cheap to clone.
#[derive(Clone, Debug)]
pub struct BfvParams(pub(crate) Arc<Inner>);

impl PartialEq for BfvParams {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.id == other.0.id
                && self.0.n == other.0.n
                && self.0.t == other.0.t
                && self.0.q.moduli() == other.0.q.moduli()
                && self.0.w == other.0.w)
    }
}

impl BfvParams {
    /// Builds parameters with `Q` made of primes of the given bit sizes,
    /// each `1 mod 2N`. `id` tags serialized ciphertexts.
    pub fn new(n: usize, t: u64, prime_bits: &[u32], w: u32, id: u8) -> Result<Self, HeError> {
        let invalid = |s: &str| Err(HeError::InvalidParams(s.to_string()));
        if prime_bits.is_empty() {
            return invalid("at least one ciphertext prime is required");
        }
        if prime_bits.iter().any(|&b| !(20..=60).contains(&b)) {
            return invalid("ciphertext primes must have 20 to 60 bits");
        }
        if !(1..=60).contains(&w) {
            return invalid("decomposition width must be 1 to 60 bits");
        }
        let step = 2 * n as u64;
        let mut q_primes: Vec<u64> = Vec::new();
        for &b in prime_bits {
            let p = primes_congruent_one(b, step, 1, &q_primes);
            match p.first() {
                Some(&p) if p != t => q_primes.push(p),
                _ => return invalid("not enough NTT-friendly primes"),
            }
        }
        let top: u32 = prime_bits.iter().rev().take(2).sum();
        if top + 64 - t.leading_zeros() > 127 {
            return invalid("top two primes and t must fit in 127 bits");
        }
        let q_big: BigUint = q_primes.iter().map(|&p| BigUint::from(p)).product();
        let q_bits = q_big.bits();
        let n_bits = n.trailing_zeros() as u64;
        // Room for a sum of FUSED_TERMS tensor products, each scaled by a
        // centered plaintext, without wrapping around Q * P.
        let t_bits = 64 - t.leading_zeros() as u64;
        let fused_bits = q_bits + 2 * n_bits + t_bits + FUSED_TERMS.trailing_zeros() as u64 + 3;
        let aux_count = fused_bits.div_ceil((AUX_PRIME_BITS - 1) as u64) as usize;
        let aux = primes_congruent_one(AUX_PRIME_BITS, step, aux_count, &q_primes);
        if aux.len() < aux_count {
            return invalid("not enough auxiliary primes");
        }
        let q = RnsBasis::new(&q_primes, n);
        let mut all = q_primes.clone();
        all.extend(&aux);
        let qp = RnsBasis::new(&all, n);

        let tm = Modulus::new(t);
        let delta_big = &q_big / t;
        let p_big: BigUint = aux.iter().map(|&p| BigUint::from(p)).product();
        let tp_big = &p_big * t;
        let mut delta = Vec::new();
        let mut t_mod_q = Vec::new();
        let mut tp_mod_q = Vec::new();
        let mut q_hat_inv = Vec::new();
        let mut q_hat = Vec::new();
        let mut p_prefix_mod_q = Vec::new();
        for (j, m) in q.moduli().iter().enumerate() {
            let qj = m.value();
            delta.push(m.shoup((&delta_big % qj).to_u64().unwrap()));
            t_mod_q.push(m.shoup(m.reduce(t)));
            tp_mod_q.push((&tp_big % qj).to_u64().unwrap());
            let hat = q_primes
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .fold(1u64, |acc, (_, &p)| m.mul(acc, m.reduce(p)));
            q_hat.push(hat);
            q_hat_inv.push(m.shoup(m.inv(hat).unwrap()));
            let mut row = Vec::new();
            let mut acc = 1u64;
            for &p in &aux {
                row.push(m.shoup(acc));
                acc = m.mul(acc, m.reduce(p));
            }
            p_prefix_mod_q.push(row);
        }
        let mut q_prefix_mod_p = Vec::new();
        let mut q_mod_p = Vec::new();
        for &p in &aux {
            let m = Modulus::new(p);
            let mut row = Vec::new();
            let mut acc = 1u64;
            for &qi in &q_primes {
                row.push(m.shoup(acc));
                acc = m.mul(acc, m.reduce(qi));
            }
            q_prefix_mod_p.push(row);
            q_mod_p.push(acc);
        }
        let l = q_primes.len();
        let top_den = if l == 1 {
            q_primes[0] as u128
        } else {
            q_primes[l - 1] as u128 * q_primes[l - 2] as u128
        };
        let digits = prime_bits.iter().map(|&b| b.div_ceil(w) as usize).collect();
        let log2_q = q_primes.iter().map(|&p| (p as f64).log2()).sum();
        let he = HeParams::new(n, t, log2_q)?;
        Ok(BfvParams(Arc::new(Inner {
            id,
            n,
            t: tm,
            he,
            q,
            qp,
            sigma: 3.2,
            w,
            digits,
            delta,
            t_mod_q,
            tp_mod_q,
            q_hat_inv,
            q_hat,
            p_prefix_mod_q,
            q_prefix_mod_p,
            q_mod_p,
            top_den,
            q_bits,
            q_limbs: q_big.to_u64_digits(),
        })))
    }

    pub fn id(&self) -> u8 {
        self.0.id
    }

    pub fn preset(&self) -> Option<ParamPreset> {
        ParamPreset::from_id(self.0.id).filter(|p| p.params() == *self)
    }

    pub fn degree(&self) -> usize {
        self.0.n
    }

    pub fn plain_modulus(&self) -> u64 {
        self.0.t.value()
    }

    pub fn he_params(&self) -> &HeParams {
        &self.0.he
    }

    pub fn ciphertext_primes(&self) -> Vec<u64> {
        self.0.q.moduli().iter().map(Modulus::value).collect()
    }

    pub fn auxiliary_primes(&self) -> Vec<u64> {
        self.0.qp.moduli()[self.0.q.len()..]
            .iter()
            .map(Modulus::value)
            .collect()
    }

    /// Bit length of `Q`.
    pub fn modulus_bits(&self) -> u64 {
        self.0.q_bits
    }

    pub fn modulus(&self) -> BigUint {
        self.0.q.product().clone()
    }

    pub fn decomposition_bits(&self) -> u32 {
        self.0.w
    }

    pub fn sigma(&self) -> f64 {
        self.0.sigma
    }

    /// Bytes per serialized coefficient, `ceil(log2 Q / 8)`.
    pub fn coeff_bytes(&self) -> usize {
        self.0.q_bits.div_ceil(8) as usize
    }
}
