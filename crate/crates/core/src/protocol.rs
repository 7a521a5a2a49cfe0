//! Constant-weight PIR: offline setup, query construction, server-side
//! processing (expansion, selection vector, inner product) and extraction.
//!
//! A row is stored as `len (u32 LE) | payload | zero padding`, packed
//! little-endian into `b = floor(log2 t)` bits per coefficient across `s`
//! plaintexts. The all-zero row is reserved as the "not found" answer, so
//! setup rejects empty and all-zero payloads.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::One;

use crate::cw_code::{
    lossy_map, min_code_length, perfect_map, perfect_map_u64, CodeSpec, Codeword,
};
use crate::eq_circuits::{ceil_log2, product_tree, select_product};
use crate::error::{HeError, PirError};
use crate::expansion::{expand, ExpandedQuery, PackedQuery};
use crate::he::{coeff_encode, HeClient, HeEvaluator, HeParams};
use crate::ring::{Modulus, RingElement};

/// How identifiers are turned into codewords.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QueryMode {
    /// Rows are addressed by position `0..n`.
    Index,
    /// Identifiers are big-endian unsigned integers below `2^keyword_bits`,
    /// perfect-mapped.
    Keyword,
    /// Identifiers are arbitrary byte strings, hashed onto the code with a
    /// public seed; two identifiers collide with probability `1/C(m, k)`.
    LossyKeyword,
}

impl QueryMode {
    pub fn id(self) -> u8 {
        match self {
            QueryMode::Index => 0,
            QueryMode::Keyword => 1,
            QueryMode::LossyKeyword => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        [
            QueryMode::Index,
            QueryMode::Keyword,
            QueryMode::LossyKeyword,
        ]
        .into_iter()
        .find(|m| m.id() == id)
    }
}

/// Parameters both parties must agree on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PirConfig {
    pub mode: QueryMode,
    /// Bit length of keywords; 0 in index mode.
    pub keyword_bits: u32,
    /// `|S|`: number of rows in index mode, `2^keyword_bits` otherwise.
    pub domain: BigUint,
    pub k: usize,
    pub m: usize,
    pub c: u32,
    pub degree: usize,
    pub plain_modulus: u64,
    pub lossy_seed: [u8; 32],
}

impl PirConfig {
    /// Index mode over `n` rows. `k` and `c` default to [`default_k`] and
    /// [`default_c`].
    pub fn index(
        n: usize,
        k: Option<usize>,
        c: Option<u32>,
        he: &HeParams,
        depth_budget: u32,
    ) -> Result<Self, PirError> {
        if n == 0 {
            return Err(PirError::InvalidConfig("empty database".into()));
        }
        Self::build(
            QueryMode::Index,
            0,
            BigUint::from(n),
            k,
            c,
            he,
            depth_budget,
            [0; 32],
        )
    }

    /// Keyword mode over the domain `[0, 2^bits)`.
    pub fn keyword(
        bits: u32,
        mode: QueryMode,
        k: Option<usize>,
        c: Option<u32>,
        he: &HeParams,
        depth_budget: u32,
        lossy_seed: [u8; 32],
    ) -> Result<Self, PirError> {
        if mode == QueryMode::Index || bits == 0 {
            return Err(PirError::InvalidConfig(
                "keyword mode needs a positive keyword length".into(),
            ));
        }
        Self::build(
            mode,
            bits,
            BigUint::one() << bits,
            k,
            c,
            he,
            depth_budget,
            lossy_seed,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        mode: QueryMode,
        keyword_bits: u32,
        domain: BigUint,
        k: Option<usize>,
        c: Option<u32>,
        he: &HeParams,
        depth_budget: u32,
        lossy_seed: [u8; 32],
    ) -> Result<Self, PirError> {
        let degree = he.degree();
        let k = match k {
            Some(k) => k,
            None => default_k(&domain, degree, depth_budget)
                .ok_or_else(|| PirError::InvalidConfig("no weight fits the depth budget".into()))?,
        };
        if k == 0 || k as u64 >= he.plain_modulus() {
            return Err(PirError::InvalidConfig(format!(
                "weight {k} must satisfy 1 <= k < t"
            )));
        }
        if !length_is_tractable(&domain, k) {
            return Err(PirError::InvalidConfig(format!(
                "domain too large for weight {k}"
            )));
        }
        let m = min_code_length(&domain, k);
        let max = degree.trailing_zeros();
        let c = c.unwrap_or_else(|| default_c(m, degree));
        if c > max {
            return Err(PirError::CompressionOutOfRange { c, max });
        }
        Ok(PirConfig {
            mode,
            keyword_bits,
            domain,
            k,
            m,
            c,
            degree,
            plain_modulus: he.plain_modulus(),
            lossy_seed,
        })
    }

    pub fn spec(&self) -> CodeSpec {
        CodeSpec::new(self.m, self.k).expect("validated at construction")
    }

    /// Query ciphertexts uploaded per retrieval.
    pub fn upload_count(&self) -> usize {
        PackedQuery::<()>::upload_count(self.m, self.c)
    }

    /// Depth of the server's selection tree.
    pub fn depth(&self) -> u32 {
        ceil_log2(self.k)
    }

    /// Codeword of row `i` in index mode.
    pub fn index_codeword(&self, i: usize) -> Result<Codeword, PirError> {
        if self.mode != QueryMode::Index || BigUint::from(i) >= self.domain {
            return Err(PirError::OutsideDomain);
        }
        Ok(perfect_map_u64(i as u64, &self.spec())?)
    }

    /// Codeword of a keyword.
    pub fn keyword_codeword(&self, key: &[u8]) -> Result<Codeword, PirError> {
        match self.mode {
            QueryMode::Index => Err(PirError::OutsideDomain),
            QueryMode::Keyword => {
                let x = BigUint::from_bytes_be(key);
                if x >= self.domain {
                    return Err(PirError::OutsideDomain);
                }
                Ok(perfect_map(&x, &self.spec())?)
            }
            QueryMode::LossyKeyword => Ok(lossy_map(key, &self.spec(), &self.lossy_seed)?),
        }
    }
}

/// Keeps `m`, and with it the number of expanded ciphertexts, below about
/// `2^24`; rules out e.g. weight-2 codes over `2^64`.
fn length_is_tractable(domain: &BigUint, k: usize) -> bool {
    domain.bits() <= 24 * k as u64
}

/// Among weights whose selection depth fits `depth_budget`, the one with the
/// fewest query ciphertexts; ties go to the smaller weight.
pub fn default_k(domain: &BigUint, degree: usize, depth_budget: u32) -> Option<usize> {
    let max_k = 1usize << depth_budget.min(16);
    (1..=max_k)
        .filter(|&k| length_is_tractable(domain, k))
        .map(|k| (min_code_length(domain, k).div_ceil(degree), k))
        .min()
        .map(|(_, k)| k)
}

/// Smallest `c` that fits the whole code in one ciphertext, capped at `log2 N`.
pub fn default_c(m: usize, degree: usize) -> u32 {
    ceil_log2(m).min(degree.trailing_zeros())
}

/// Usable bits per plaintext coefficient.
pub fn bits_per_coeff(t: u64) -> u32 {
    63 - t.leading_zeros()
}

/// Bytes of row data (length header included) one plaintext carries.
pub fn plaintext_capacity(degree: usize, t: u64) -> usize {
    degree * bits_per_coeff(t) as usize / 8
}

/// Largest payload that fits in `s` plaintexts.
pub fn payload_capacity(s: usize, degree: usize, t: u64) -> usize {
    (s * plaintext_capacity(degree, t)).saturating_sub(4)
}

/// Plaintexts needed for a payload of `len` bytes.
pub fn plaintexts_for(len: usize, degree: usize, t: u64) -> usize {
    (len + 4).div_ceil(plaintext_capacity(degree, t)).max(1)
}

/// Frames and packs one payload into exactly `s` plaintexts.
pub fn pack_row(payload: &[u8], s: usize, he: &HeParams) -> Result<Vec<RingElement>, HeError> {
    let (n, t) = (he.degree(), he.plain_modulus());
    let cap = plaintext_capacity(n, t);
    let mut bytes = Vec::with_capacity(s * cap);
    bytes.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    bytes.extend_from_slice(payload);
    bytes.resize(s * cap, 0);
    let b = bits_per_coeff(t);
    bytes
        .chunks(cap)
        .map(|chunk| {
            let mut coeffs = vec![0u64; n];
            for (bit, coeff) in BitIter::new(chunk)
                .collect::<Vec<_>>()
                .chunks(b as usize)
                .zip(coeffs.iter_mut())
            {
                *coeff = bit
                    .iter()
                    .enumerate()
                    .fold(0, |acc, (i, &v)| acc | (v as u64) << i);
            }
            coeff_encode(he.plain_ring(), &coeffs)
        })
        .collect()
}

/// Inverse of [`pack_row`]: `None` for the all-zero row.
pub fn unpack_row(plains: &[RingElement], he: &HeParams) -> Result<Option<Vec<u8>>, PirError> {
    let (n, t) = (he.degree(), he.plain_modulus());
    let b = bits_per_coeff(t) as usize;
    let cap = plaintext_capacity(n, t);
    let mut bytes = Vec::with_capacity(plains.len() * cap);
    for p in plains {
        let mut bits = Vec::with_capacity(n * b);
        for &c in p.coeffs() {
            if c >> b != 0 {
                return Err(PirError::CorruptedResponse);
            }
            bits.extend((0..b).map(|i| (c >> i) & 1 == 1));
        }
        bits.truncate(cap * 8);
        bytes.extend(bits.chunks(8).map(|byte| {
            byte.iter()
                .enumerate()
                .fold(0u8, |acc, (i, &v)| acc | (v as u8) << i)
        }));
    }
    if bytes.iter().all(|&x| x == 0) {
        return Ok(None);
    }
    if bytes.len() < 4 {
        return Err(PirError::CorruptedResponse);
    }
    let len = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
    if len == 0 || len > bytes.len() - 4 || bytes[4 + len..].iter().any(|&x| x != 0) {
        return Err(PirError::CorruptedResponse);
    }
    Ok(Some(bytes[4..4 + len].to_vec()))
}

struct BitIter<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitIter<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        BitIter { bytes, pos: 0 }
    }
}

impl Iterator for BitIter<'_> {
    type Item = bool;

    fn next(&mut self) -> Option<bool> {
        let byte = self.bytes.get(self.pos / 8)?;
        let bit = (byte >> (self.pos % 8)) & 1 == 1;
        self.pos += 1;
        Some(bit)
    }
}

/// Server-side table: `s` plaintexts and one codeword per row.
#[derive(Clone, Debug)]
pub struct PirDatabase {
    config: PirConfig,
    s: usize,
    rows: Vec<Vec<RingElement>>,
    codewords: Vec<Codeword>,
}

impl PirDatabase {
    /// Packs `(identifier, payload)` rows. Identifiers are ignored in index
    /// mode. `s = None` picks the smallest `s` that fits every payload.
    pub fn setup(
        rows: &[(Vec<u8>, Vec<u8>)],
        config: &PirConfig,
        he: &HeParams,
        s: Option<usize>,
    ) -> Result<Self, PirError> {
        if he.degree() != config.degree || he.plain_modulus() != config.plain_modulus {
            return Err(PirError::InvalidConfig(
                "config was built for other parameters".into(),
            ));
        }
        if config.mode == QueryMode::Index && BigUint::from(rows.len()) != config.domain {
            return Err(PirError::InvalidConfig(
                "index mode needs exactly one row per index".into(),
            ));
        }
        let (n, t) = (he.degree(), he.plain_modulus());
        for (row, (_, payload)) in rows.iter().enumerate() {
            if payload.iter().all(|&x| x == 0) {
                return Err(PirError::ZeroPayload(row));
            }
        }
        let s = match s {
            Some(s) if s >= 1 => s,
            Some(_) => return Err(PirError::InvalidConfig("s must be positive".into())),
            None => rows
                .iter()
                .map(|(_, p)| plaintexts_for(p.len(), n, t))
                .max()
                .unwrap_or(1),
        };
        let cap = payload_capacity(s, n, t);
        if let Some((row, (_, p))) = rows.iter().enumerate().find(|(_, (_, p))| p.len() > cap) {
            return Err(PirError::OversizePayload {
                row,
                len: p.len(),
                cap,
            });
        }

        let mut codewords = Vec::with_capacity(rows.len());
        let mut seen_ids: HashMap<&[u8], usize> = HashMap::new();
        let mut seen_words: HashMap<Codeword, usize> = HashMap::new();
        for (i, (id, _)) in rows.iter().enumerate() {
            let word = if config.mode == QueryMode::Index {
                config.index_codeword(i)?
            } else {
                if let Some(&j) = seen_ids.get(id.as_slice()) {
                    return Err(PirError::DuplicateIdentifier(j, i));
                }
                seen_ids.insert(id, i);
                config.keyword_codeword(id)?
            };
            if let Some(&j) = seen_words.get(&word) {
                return Err(PirError::CodewordCollision(j, i));
            }
            seen_words.insert(word.clone(), i);
            codewords.push(word);
        }
        let packed = crate::par::map(rows, |(_, p)| pack_row(p, s, he))?;
        Ok(PirDatabase {
            config: config.clone(),
            s,
            rows: packed,
            codewords,
        })
    }

    pub fn config(&self) -> &PirConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Plaintexts per row.
    pub fn s(&self) -> usize {
        self.s
    }

    pub fn codewords(&self) -> &[Codeword] {
        &self.codewords
    }

    pub fn row(&self, i: usize) -> &[RingElement] {
        &self.rows[i]
    }
}

/// `s` ciphertexts answering one query.
#[derive(Clone, Debug)]
pub struct PirResponse<C> {
    pub cts: Vec<C>,
}

/// Packs `2^c` bits per ciphertext, each scaled by `2^-c mod t`, and
/// encrypts the `ceil(m / 2^c)` plaintexts.
pub fn build_query<B: HeClient>(
    client: &B,
    config: &PirConfig,
    he: &HeParams,
    word: &Codeword,
) -> Result<PackedQuery<B::Ct>, PirError> {
    if word.len() != config.m || word.weight() != config.k {
        return Err(PirError::OutsideDomain);
    }
    let tm = Modulus::new(config.plain_modulus);
    let scale = tm
        .inv(tm.pow(2, config.c as u64))
        .ok_or(PirError::InvalidConfig("2 is not invertible mod t".into()))?;
    let per = 1usize << config.c;
    let bits = word.bits();
    let cts = bits
        .chunks(per)
        .map(|chunk| {
            let coeffs: Vec<u64> = chunk.iter().map(|&b| if b { scale } else { 0 }).collect();
            client.encrypt(&coeff_encode(he.plain_ring(), &coeffs)?)
        })
        .collect::<Result<Vec<_>, HeError>>()?;
    Ok(PackedQuery {
        cts,
        c: config.c,
        m: config.m,
    })
}

/// `sel[i] = prod_{j : E(i)_j = 1} eq[j]` for every row.
pub fn compute_selection_vector<E: HeEvaluator>(
    eval: &E,
    eq: &ExpandedQuery<E::Ct>,
    db: &PirDatabase,
) -> Result<Vec<E::Ct>, PirError> {
    check_expanded(eq, db)?;
    Ok(crate::par::map(db.codewords(), |w| {
        select_product(eval, &eq.cts, w)
    })?)
}

/// `response[j] = sum_i sel[i] * DB[i][j]`.
pub fn inner_product<E: HeEvaluator>(
    eval: &E,
    sel: &[E::Ct],
    db: &PirDatabase,
) -> Result<PirResponse<E::Ct>, PirError> {
    if sel.len() != db.len() {
        return Err(PirError::WrongCiphertextCount {
            expected: db.len(),
            got: sel.len(),
        });
    }
    let refs: Vec<&E::Ct> = sel.iter().collect();
    let plains: Vec<&[RingElement]> = db.rows.iter().map(|r| r.as_slice()).collect();
    Ok(PirResponse {
        cts: eval.plain_inner_product(&refs, &plains)?,
    })
}

fn check_expanded<C>(eq: &ExpandedQuery<C>, db: &PirDatabase) -> Result<(), PirError> {
    if eq.cts.len() != db.config.m {
        return Err(PirError::WrongCiphertextCount {
            expected: db.config.m,
            got: eq.cts.len(),
        });
    }
    Ok(())
}

/// Expansion, selection vector and inner product.
///
/// Same result and operation counts as [`compute_selection_vector`] followed
/// by [`inner_product`], but the last multiplication of every row's product
/// tree is handed to [`HeEvaluator::product_inner_product`] so backends can
/// fuse it with the plaintext products.
pub fn process<E: HeEvaluator>(
    eval: &E,
    query: &PackedQuery<E::Ct>,
    db: &PirDatabase,
) -> Result<PirResponse<E::Ct>, PirError> {
    if query.m != db.config.m || query.c != db.config.c {
        return Err(PirError::InvalidConfig(
            "query does not match the database configuration".into(),
        ));
    }
    let eq = expand(eval, query)?;
    check_expanded(&eq, db)?;
    let plains: Vec<&[RingElement]> = db.rows.iter().map(|r| r.as_slice()).collect();
    if db.config.k == 1 {
        let sel: Vec<&E::Ct> = db
            .codewords
            .iter()
            .map(|w| &eq.cts[w.positions()[0]])
            .collect();
        return Ok(PirResponse {
            cts: eval.plain_inner_product(&sel, &plains)?,
        });
    }
    // Left half takes the first 2^(depth-1) factors so both subtrees stay
    // within depth - 1, matching the balanced tree of `select_product`.
    let split = 1usize << (ceil_log2(db.config.k) - 1);
    let halves = crate::par::map(db.codewords(), |w| {
        let pos = w.positions();
        let pick =
            |ps: &[usize]| product_tree(eval, ps.iter().map(|&j| eq.cts[j].clone()).collect());
        Ok::<_, HeError>((pick(&pos[..split])?, pick(&pos[split..])?))
    })?;
    let pairs: Vec<(&E::Ct, &E::Ct)> = halves.iter().map(|(a, b)| (a, b)).collect();
    Ok(PirResponse {
        cts: eval.product_inner_product(&pairs, &plains)?,
    })
}

/// Decrypts and unframes a response: `Ok(None)` means "not found".
pub fn extract<B: HeClient>(
    client: &B,
    he: &HeParams,
    resp: &PirResponse<B::Ct>,
) -> Result<Option<Vec<u8>>, PirError> {
    if resp.cts.is_empty() {
        return Err(PirError::WrongCiphertextCount {
            expected: 1,
            got: 0,
        });
    }
    let plains = resp
        .cts
        .iter()
        .map(|c| client.decrypt(c))
        .collect::<Result<Vec<_>, _>>()?;
    unpack_row(&plains, he)
}
