//! Closed-form operation counts, depths and communication for constant-weight,
//! folklore, unary, SealPIR and MulPIR retrieval, plus the query-length
//! comparison table.

use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::bfv::{serialized_ciphertext_len, serialized_switched_len, BfvParams};
use crate::cw_code::min_code_length;
use crate::eq_circuits::ceil_log2;

/// Costs of one retrieval. Counts exclude query expansion unless named so.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostReport {
    pub depth: u32,
    pub query_bits: BigUint,
    pub upload_cts: BigUint,
    pub download_cts: BigUint,
    pub plain_mul: BigUint,
    /// Ciphertext multiplications of a balanced product tree.
    pub mul: BigUint,
    /// Ciphertext multiplications as the closed-form bound counts them.
    pub mul_bound: BigUint,
    /// Substitutions spent on expanding the uploaded ciphertexts.
    pub expansion_substitutions: BigUint,
}

fn big(x: usize) -> BigUint {
    BigUint::from(x)
}

fn uploads(query_bits: &BigUint, c: u32) -> BigUint {
    let per = BigUint::one() << c;
    (query_bits + &per - 1u32) / per
}

/// Constant-weight retrieval of `n` stored rows of `s` plaintexts over a
/// domain of size `domain`, with query compression `c`.
pub fn cw_pir_cost(n: usize, domain: &BigUint, k: usize, s: usize, c: u32) -> CostReport {
    let m = big(min_code_length(domain, k));
    let upload = uploads(&m, c);
    CostReport {
        depth: ceil_log2(k),
        expansion_substitutions: &upload * ((BigUint::one() << c) - 1u32),
        query_bits: m,
        upload_cts: upload,
        download_cts: big(s),
        plain_mul: big(n * s),
        mul: big(n * (k - 1)),
        mul_bound: big(n * k),
    }
}

/// Folklore retrieval: rows addressed by their `ceil(log2 n)`-bit index.
pub fn folklore_pir_cost(n: usize, s: usize, c: u32) -> CostReport {
    let l = ceil_log2(n.max(2)) as usize;
    let upload = uploads(&big(l), c);
    CostReport {
        depth: ceil_log2(l),
        expansion_substitutions: &upload * ((BigUint::one() << c) - 1u32),
        query_bits: big(l),
        upload_cts: upload,
        download_cts: big(s),
        plain_mul: big(n * s),
        mul: big(n * (l - 1)),
        mul_bound: big(n * l),
    }
}

/// Unary selection vector: the weight-1 code, one bit per domain element.
pub fn unary_pir_cost(n: usize, domain: &BigUint, s: usize, c: u32) -> CostReport {
    cw_pir_cost(n, domain, 1, s, c)
}

/// Smallest `r` with `r^d >= x`.
pub fn ceil_root(x: &BigUint, d: u32) -> BigUint {
    assert!(d >= 1);
    let r = x.nth_root(d);
    if r.pow(d) == *x {
        r
    } else {
        r + 1u32
    }
}

/// `d * ceil(|S|^(1/d))`: one unary vector per dimension of a `d`-dimensional table.
pub fn dimensionwise_bits(domain: &BigUint, d: u32) -> BigUint {
    ceil_root(domain, d) * d
}

/// `n^((d-i)/d)`, read as the number of entries left after `i` of `d`
/// dimensions of side `ceil(n^(1/d))` have been folded.
fn folded(n: usize, d: u32, i: u32) -> BigUint {
    if i == 0 {
        return big(n);
    }
    ceil_root(&big(n), d).pow(d - i)
}

/// SealPIR on a `d`-dimensional table with expansion factor `f`.
pub fn sealpir_cost(n: usize, d: u32, s: usize, f: u64) -> CostReport {
    assert!(d >= 1 && f > 1);
    let plain_mul: BigUint = (0..d)
        .map(|i| folded(n, d, i) * BigUint::from(f).pow(i))
        .sum::<BigUint>()
        * s;
    CostReport {
        depth: d - 1,
        query_bits: dimensionwise_bits(&big(n), d),
        upload_cts: BigUint::zero(),
        download_cts: BigUint::from(f).pow(d - 1) * s,
        plain_mul,
        mul: BigUint::zero(),
        mul_bound: BigUint::zero(),
        expansion_substitutions: BigUint::zero(),
    }
}

/// MulPIR on a `d`-dimensional table.
pub fn mulpir_cost(n: usize, d: u32, s: usize) -> CostReport {
    assert!(d >= 1);
    let mul: BigUint = (1..d).map(|i| folded(n, d, i)).sum::<BigUint>() * s;
    CostReport {
        depth: d - 1,
        query_bits: dimensionwise_bits(&big(n), d),
        upload_cts: BigUint::zero(),
        download_cts: big(s),
        plain_mul: big(n * s),
        mul_bound: mul.clone(),
        mul,
        expansion_substitutions: BigUint::zero(),
    }
}

/// `F = 2 log2 q / log2 t`, rounded to the nearest integer.
pub fn expansion_factor(params: &BfvParams) -> u64 {
    params.he_params().expansion_factor().round() as u64
}

/// Serialized query and response sizes in bytes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WireSizes {
    pub query_bytes: usize,
    pub response_bytes: usize,
}

/// Bytes on the wire for `upload` seeded query ciphertexts and `download`
/// response ciphertexts switched down to the first prime.
pub fn wire_sizes(params: &BfvParams, upload: usize, download: usize) -> WireSizes {
    WireSizes {
        query_bytes: upload * serialized_ciphertext_len(params, true),
        response_bytes: download * serialized_switched_len(params),
    }
}

/// One row of the query-length table: constant-weight lengths for
/// `k = 1..=4` and dimension-wise lengths for `d = 1..=3`; `None` where the
/// table leaves the cell out.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryLengthRow {
    pub log2_domain: u32,
    pub cw: [Option<BigUint>; 4],
    pub dimensionwise: [Option<BigUint>; 3],
}

/// Largest domain bit-length shown for depth-0 (`k = 1`, `d = 1`) and
/// depth-1 (`k = 2`, `d = 2`) columns.
const SHOWN_UP_TO: [u32; 2] = [18, 38];

pub fn query_length_row(log2_domain: u32) -> QueryLengthRow {
    let domain = BigUint::one() << log2_domain;
    let shown = |depth: usize| SHOWN_UP_TO.get(depth).is_none_or(|&max| log2_domain <= max);
    let cw = std::array::from_fn(|i| {
        let k = i + 1;
        shown(ceil_log2(k) as usize).then(|| big(min_code_length(&domain, k)))
    });
    let dimensionwise = std::array::from_fn(|i| {
        let d = i as u32 + 1;
        shown(i).then(|| dimensionwise_bits(&domain, d))
    });
    QueryLengthRow {
        log2_domain,
        cw,
        dimensionwise,
    }
}

/// Rows for `log2 |S| = 4, 6, ..., 48`.
pub fn query_length_table() -> Vec<QueryLengthRow> {
    (4..=48).step_by(2).map(query_length_row).collect()
}

/// CSV rendering with `-` for omitted cells.
pub fn query_length_csv(rows: &[QueryLengthRow]) -> String {
    let mut out = String::from("log2_domain,cw_k1,cw_k2,cw_k3,cw_k4,dim_d1,dim_d2,dim_d3\n");
    for row in rows {
        let _ = write!(out, "{}", row.log2_domain);
        for cell in row.cw.iter().chain(&row.dimensionwise) {
            match cell {
                Some(v) => {
                    let _ = write!(out, ",{v}");
                }
                None => out.push_str(",-"),
            }
        }
        out.push('\n');
    }
    out
}

/// Circuit properties of one equality operator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EqOperatorRow {
    pub name: &'static str,
    pub domain: String,
    pub operations: String,
    /// Ciphertext multiplications a balanced evaluation performs.
    pub mul: usize,
    pub plain_mul: usize,
    pub depth: u32,
    pub condition: String,
}

/// The four equality operators for operand width `l` (folklore) and
/// `CW(m, k)` (constant-weight).
pub fn eq_operator_table(l: usize, m: usize, k: usize) -> Vec<EqOperatorRow> {
    vec![
        EqOperatorRow {
            name: "Plain Fl.",
            domain: "{0,1}^l".into(),
            operations: format!("l*M = {l}*M"),
            mul: l - 1,
            plain_mul: 0,
            depth: ceil_log2(l),
            condition: "l >= log2 n".into(),
        },
        EqOperatorRow {
            name: "Plain Cw",
            domain: format!("CW({m},{k})"),
            operations: format!("k*M = {k}*M"),
            mul: k - 1,
            plain_mul: 0,
            depth: ceil_log2(k),
            condition: "C(m,k) >= n".into(),
        },
        EqOperatorRow {
            name: "Arithmetic Fl.",
            domain: "{0,1}^l".into(),
            operations: format!("2l*M = {}*M", 2 * l),
            mul: 2 * l - 1,
            plain_mul: 0,
            depth: 1 + ceil_log2(l),
            condition: "l >= log2 n".into(),
        },
        EqOperatorRow {
            name: "Arithmetic Cw",
            domain: format!("CW({m},{k})"),
            operations: format!("PM + (m+k)*M = PM + {}*M", m + k),
            mul: m + k - 1,
            plain_mul: 1,
            depth: 1 + ceil_log2(k),
            condition: "C(m,k) >= n".into(),
        },
    ]
}

pub fn eq_operator_csv(rows: &[EqOperatorRow]) -> String {
    let mut out = String::from(
        "operator,domain,operations,measured_mul,measured_plain_mul,depth,condition\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.name,
            csv_field(&r.domain),
            r.operations,
            r.mul,
            r.plain_mul,
            r.depth,
            r.condition
        );
    }
    out
}

/// Quotes a field that contains a separator.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Costs of the four retrieval schemes for `n` rows of `s` plaintexts, with
/// `d`-dimensional SealPIR/MulPIR, weight-`k` constant-weight codes and
/// expansion factor `f`.
pub fn pir_comparison_table(
    n: usize,
    s: usize,
    k: usize,
    d: u32,
    f: u64,
) -> Vec<(&'static str, CostReport)> {
    let domain = big(n);
    vec![
        ("SealPIR", sealpir_cost(n, d, s, f)),
        ("MulPIR", mulpir_cost(n, d, s)),
        ("Fl. PIR", folklore_pir_cost(n, s, 0)),
        ("Cw PIR", cw_pir_cost(n, &domain, k, s, 0)),
    ]
}

pub fn pir_comparison_csv(rows: &[(&'static str, CostReport)]) -> String {
    let mut out = String::from("method,depth,query_bits,plain_mul,mul,mul_bound,download_cts\n");
    for (name, r) in rows {
        let _ = writeln!(
            out,
            "{name},{},{},{},{},{},{}",
            r.depth, r.query_bits, r.plain_mul, r.mul, r.mul_bound, r.download_cts
        );
    }
    out
}

/// Kilobytes (`10^3` bytes) with one decimal, as the size columns print them.
pub fn kilobytes(bytes: usize) -> f64 {
    (bytes as f64 / 100.0).round() / 10.0
}

/// `u64` view of a count, for callers that know it is small.
pub fn as_u64(x: &BigUint) -> u64 {
    x.to_u64().unwrap_or(u64::MAX)
}
