//! Benchmark reports: equality operators on a batch of slots, and
//! constant-weight retrieval costs with an optional in-process run.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use num_bigint::BigUint;
use rand::Rng;

use cwpir_core::bfv::{keygen, BfvEvaluator, ParamPreset};
use cwpir_core::cost_model::{as_u64, cw_pir_cost, kilobytes, wire_sizes};
use cwpir_core::cw_code::{min_code_length, perfect_map, CodeSpec, Codeword};
use cwpir_core::eq_circuits::{
    arith_cw_eq, arith_folklore_eq, decrypt_slots, encrypt_bitsliced, plain_cw_eq,
    plain_folklore_eq,
};
use cwpir_core::error::{EqError, PirError};
use cwpir_core::he::{
    expansion_galois_elements, BatchEncoder, HeClient, HeEvaluator, HeParams, OpCounts, Transparent,
};
use cwpir_core::protocol::{
    build_query, extract, plaintext_capacity, process, PirConfig, PirDatabase,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EqOp {
    PlainFolklore,
    PlainCw,
    ArithFolklore,
    ArithCw,
}

impl EqOp {
    pub const ALL: [EqOp; 4] = [
        EqOp::PlainFolklore,
        EqOp::PlainCw,
        EqOp::ArithFolklore,
        EqOp::ArithCw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EqOp::PlainFolklore => "plain-fl",
            EqOp::PlainCw => "plain-cw",
            EqOp::ArithFolklore => "arith-fl",
            EqOp::ArithCw => "arith-cw",
        }
    }

    fn is_cw(self) -> bool {
        matches!(self, EqOp::PlainCw | EqOp::ArithCw)
    }
}

impl FromStr for EqOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|op| op.name() == s)
            .ok_or_else(|| format!("unknown operator {s:?}"))
    }
}

/// Parses `2^B` or a plain decimal integer.
pub fn parse_size(text: &str) -> Result<BigUint, String> {
    let value = match text.split_once('^') {
        Some(("2", exp)) => {
            BigUint::from(1u32)
                << exp
                    .trim()
                    .parse::<u32>()
                    .map_err(|e| format!("{text:?}: {e}"))?
        }
        Some(_) => return Err(format!("{text:?}: only powers of two are accepted")),
        None => text
            .parse::<BigUint>()
            .map_err(|e| format!("{text:?}: {e}"))?,
    };
    if value < BigUint::from(2u32) {
        return Err(format!("{text:?}: domain must hold at least two elements"));
    }
    Ok(value)
}

/// One measured equality evaluation over a full batch of slots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EqBenchRow {
    pub op: EqOp,
    pub domain_bits: u64,
    pub k: usize,
    /// Operand width: `l = ceil(log2 n)` or the code length `m`.
    pub width: usize,
    pub depth: u32,
    pub counts: OpCounts,
    pub millis: u128,
    /// Every slot matched the direct comparison.
    pub correct: bool,
}

pub fn eq_csv_header() -> &'static str {
    "op,log2_n,k,width,depth,mul,plain_mul,add,time_ms,correct"
}

impl EqBenchRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.op.name(),
            self.domain_bits - 1,
            self.k,
            self.width,
            self.depth,
            self.counts.mul,
            self.counts.plain_mul,
            self.counts.add,
            self.millis,
            self.correct
        )
    }
}

/// Operand width of `op` over `domain` at weight `k`.
pub fn eq_width(op: EqOp, domain: &BigUint, k: usize) -> usize {
    if op.is_cw() {
        min_code_length(domain, k)
    } else {
        (domain - 1u32).bits().max(1) as usize
    }
}

fn encode_element(
    op: EqOp,
    x: &BigUint,
    width: usize,
    spec: Option<&CodeSpec>,
) -> Result<Vec<bool>, EqError> {
    match spec {
        Some(spec) if op.is_cw() => Ok(perfect_map(x, spec)?.bits()),
        _ => Ok((0..width as u64).map(|i| x.bit(i)).collect()),
    }
}

/// Fills every slot with a random domain element, a quarter of them equal to
/// a random reference, evaluates `op` and checks each slot.
pub fn bench_eq<B, E, R>(
    client: &B,
    eval: &E,
    op: EqOp,
    domain: &BigUint,
    k: usize,
    rng: &mut R,
) -> Result<EqBenchRow, EqError>
where
    B: HeClient<Ct = E::Ct>,
    E: HeEvaluator,
    R: Rng,
{
    let encoder = BatchEncoder::new(eval.params().plain_ring())?;
    let width = eq_width(op, domain, k);
    let spec = if op.is_cw() {
        Some(CodeSpec::new(width, k)?)
    } else {
        None
    };
    let random_element = |rng: &mut R| {
        let bytes: Vec<u8> = (0..domain.bits().div_ceil(8))
            .map(|_| rng.random())
            .collect();
        BigUint::from_bytes_le(&bytes) % domain
    };
    let reference = random_element(rng);
    let slots: Vec<BigUint> = (0..encoder.slots())
        .map(|_| {
            if rng.random_ratio(1, 4) {
                reference.clone()
            } else {
                random_element(rng)
            }
        })
        .collect();
    let elements = slots
        .iter()
        .map(|x| encode_element(op, x, width, spec.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let y = encode_element(op, &reference, width, spec.as_ref())?;
    let x = encrypt_bitsliced(client, &encoder, &elements)?;
    let yb = if matches!(op, EqOp::ArithFolklore | EqOp::ArithCw) {
        Some(encrypt_bitsliced(
            client,
            &encoder,
            &vec![y.clone(); encoder.slots()],
        )?)
    } else {
        None
    };

    let before = eval.meter().snapshot();
    let start = Instant::now();
    let result = match op {
        EqOp::PlainFolklore => plain_folklore_eq(eval, &x, &y)?,
        EqOp::PlainCw => plain_cw_eq(eval, &x, &Codeword::from_bits(&y), spec.as_ref().unwrap())?,
        EqOp::ArithFolklore => arith_folklore_eq(eval, &x, yb.as_ref().unwrap())?,
        EqOp::ArithCw => arith_cw_eq(eval, &x, yb.as_ref().unwrap(), k)?,
    };
    let millis = start.elapsed().as_millis();
    let counts = eval.meter().snapshot() - before;
    let got = decrypt_slots(client, &encoder, &result)?;
    let correct = got
        .iter()
        .zip(&slots)
        .all(|(&v, x)| v == (*x == reference) as u64);
    Ok(EqBenchRow {
        op,
        domain_bits: domain.bits(),
        k,
        width,
        depth: eval.depth(&result),
        counts,
        millis,
        correct,
    })
}

/// Which backend `bench` runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Transparent,
    Bfv(ParamPreset),
}

/// [`bench_eq`] on the chosen backend. The transparent backend uses the
/// plaintext ring of `toy-1024`.
pub fn run_eq(
    backend: Backend,
    op: EqOp,
    domain: &BigUint,
    k: usize,
) -> Result<EqBenchRow, EqError> {
    let mut rng = rand::rng();
    match backend {
        Backend::Transparent => {
            let p = ParamPreset::Toy1024;
            let t = Transparent::new(HeParams::new(p.degree(), p.plain_modulus(), 100.0)?);
            bench_eq(&t, &t, op, domain, k, &mut rng)
        }
        Backend::Bfv(preset) => {
            let (client, keys) = keygen(&preset.params(), &[], rng.random());
            let eval = BfvEvaluator::new(keys.into());
            bench_eq(&client, &eval, op, domain, k, &mut rng)
        }
    }
}

/// Retrieval costs for `n` index rows of `s` plaintexts at weight `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct PirBenchRow {
    pub n: usize,
    pub k: usize,
    pub s: usize,
    pub m: usize,
    pub c: u32,
    pub depth: u32,
    pub upload_cts: u64,
    pub download_cts: u64,
    pub query_kb: f64,
    pub response_kb: f64,
    pub mul: u64,
    pub plain_mul: u64,
    pub substitutions: u64,
    pub run: Option<PirRun>,
}

/// Measurements of an in-process run.
#[derive(Clone, Debug, PartialEq)]
pub struct PirRun {
    pub queries: usize,
    pub recovered: usize,
    pub millis_per_query: f64,
    pub counts_per_query: OpCounts,
}

pub fn pir_csv_header() -> &'static str {
    "n,k,s,m,c,depth,upload_cts,download_cts,query_kb,response_kb,mul,plain_mul,substitutions,queries,recovered,ms_per_query"
}

impl PirBenchRow {
    pub fn csv(&self) -> String {
        let mut out = format!(
            "{},{},{},{},{},{},{},{},{:.1},{:.1},{},{},{}",
            self.n,
            self.k,
            self.s,
            self.m,
            self.c,
            self.depth,
            self.upload_cts,
            self.download_cts,
            self.query_kb,
            self.response_kb,
            self.mul,
            self.plain_mul,
            self.substitutions
        );
        match &self.run {
            Some(r) => {
                let _ = write!(
                    out,
                    ",{},{},{:.1}",
                    r.queries, r.recovered, r.millis_per_query
                );
            }
            None => out.push_str(",0,-,-"),
        }
        out
    }
}

/// Closed-form report for the index configuration `PirConfig::index` would
/// build; `c` defaults to fitting the code in as few ciphertexts as possible.
pub fn pir_report(
    preset: ParamPreset,
    n: usize,
    k: usize,
    s: usize,
    c: Option<u32>,
) -> Result<PirBenchRow, PirError> {
    let params = preset.params();
    let config = PirConfig::index(n, Some(k), c, params.he_params(), preset.pir_depth_budget())?;
    let cost = cw_pir_cost(n, &config.domain, k, s, config.c);
    let sizes = wire_sizes(
        &params,
        as_u64(&cost.upload_cts) as usize,
        as_u64(&cost.download_cts) as usize,
    );
    Ok(PirBenchRow {
        n,
        k,
        s,
        m: config.m,
        c: config.c,
        depth: cost.depth,
        upload_cts: as_u64(&cost.upload_cts),
        download_cts: as_u64(&cost.download_cts),
        query_kb: kilobytes(sizes.query_bytes),
        response_kb: kilobytes(sizes.response_bytes),
        mul: as_u64(&cost.mul),
        plain_mul: as_u64(&cost.plain_mul),
        substitutions: as_u64(&cost.expansion_substitutions),
        run: None,
    })
}

/// [`pir_report`] plus `queries` BFV retrievals from a random database
/// whose payloads fill all `s` plaintexts.
pub fn pir_run(
    preset: ParamPreset,
    n: usize,
    k: usize,
    s: usize,
    c: Option<u32>,
    queries: usize,
) -> Result<PirBenchRow, PirError> {
    let mut row = pir_report(preset, n, k, s, c)?;
    let params = preset.params();
    let he = params.he_params();
    let config = PirConfig::index(n, Some(k), Some(row.c), he, preset.pir_depth_budget())?;
    let mut rng = rand::rng();
    let payload_len = s * plaintext_capacity(he.degree(), he.plain_modulus()) - 4;
    let rows: Vec<(Vec<u8>, Vec<u8>)> = (0..n)
        .map(|_| {
            let mut p = vec![0u8; payload_len];
            rng.fill(&mut p[..]);
            p[0] |= 1;
            (Vec::new(), p)
        })
        .collect();
    let db = PirDatabase::setup(&rows, &config, he, Some(s))?;
    let (client, keys) = keygen(
        &params,
        &expansion_galois_elements(he.degree(), config.c),
        rng.random(),
    );
    let eval = BfvEvaluator::new(keys.into());
    let mut recovered = 0;
    let before = eval.meter().snapshot();
    let start = Instant::now();
    for _ in 0..queries {
        let i = rng.random_range(0..n);
        let query = build_query(&client, &config, he, &config.index_codeword(i)?)?;
        let resp = process(&eval, &query, &db)?;
        if extract(&client, he, &resp)?.as_deref() == Some(rows[i].1.as_slice()) {
            recovered += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let total = eval.meter().snapshot() - before;
    let per = |x: u64| x / queries.max(1) as u64;
    row.run = Some(PirRun {
        queries,
        recovered,
        millis_per_query: if queries == 0 {
            0.0
        } else {
            elapsed / queries as f64
        },
        counts_per_query: OpCounts {
            add: per(total.add),
            plain_mul: per(total.plain_mul),
            mul: per(total.mul),
            substitute: per(total.substitute),
        },
    });
    Ok(row)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_cw_at_2_16_weight_16() {
        let row = run_eq(
            Backend::Transparent,
            EqOp::PlainCw,
            &parse_size("2^16").unwrap(),
            16,
        )
        .unwrap();
        assert_eq!((row.width, row.depth, row.counts.mul), (22, 4, 15));
        assert!(row.correct);
    }

    #[test]
    fn every_operator_is_correct_on_both_backends() {
        let domain = parse_size("2^8").unwrap();
        for op in EqOp::ALL {
            let row = run_eq(Backend::Transparent, op, &domain, 2).unwrap();
            assert!(row.correct, "{op:?}");
        }
        for op in [EqOp::PlainFolklore, EqOp::PlainCw] {
            let row = run_eq(
                Backend::Bfv(ParamPreset::Toy1024),
                op,
                &parse_size("2^4").unwrap(),
                2,
            )
            .unwrap();
            assert!(row.correct, "{op:?}");
        }
    }

    #[test]
    fn size_parsing() {
        assert_eq!(parse_size("2^10").unwrap(), BigUint::from(1024u32));
        assert_eq!(parse_size("1000").unwrap(), BigUint::from(1000u32));
        assert!(parse_size("3^2").is_err() && parse_size("1").is_err() && parse_size("x").is_err());
    }

    #[test]
    fn unary_upload_is_rows_over_slots() {
        for n in [100, 4096, 5000, 20000] {
            let row = pir_report(ParamPreset::Paper4096, n, 1, 1, None).unwrap();
            assert_eq!(row.m, n);
            assert_eq!(row.upload_cts, n.div_ceil(1 << row.c) as u64);
            assert_eq!(row.mul, 0);
        }
    }

    #[test]
    fn toy_run_recovers_every_row() {
        let row = pir_run(ParamPreset::Toy1024, 20, 1, 2, None, 3).unwrap();
        let run = row.run.unwrap();
        assert_eq!(run.recovered, 3);
        assert_eq!(
            run.counts_per_query.plain_mul,
            row.plain_mul + 2 * row.substitutions
        );
    }
}
