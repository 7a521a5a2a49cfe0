//! Payloads of the HELLO, QUERY and RESPONSE frames.

use num_bigint::BigUint;

use cwpir_core::bfv::{
    deserialize_ciphertext, deserialize_eval_keys, deserialize_switched, serialize_ciphertext,
    serialize_eval_keys, serialize_switched, BfvCiphertext, BfvParams, EvalKeySet, ParamPreset,
    SwitchedCiphertext,
};
use cwpir_core::cw_code::min_code_length;
use cwpir_core::protocol::{PirConfig, QueryMode};

use crate::error::TransportError;
use crate::wire::{put_blob, PayloadReader};

/// Server configuration announced in reply to HELLO:
/// `preset (u8) | mode (u8) | keyword_bits (u16) | k (u32) | m (u64) | c (u8) |
/// s (u32) | rows (u64) | domain (u32 len + big-endian bytes) | lossy seed (32)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ServerHello {
    pub preset: ParamPreset,
    pub mode: QueryMode,
    pub keyword_bits: u16,
    pub k: u32,
    pub m: u64,
    pub c: u8,
    pub s: u32,
    pub rows: u64,
    pub domain: BigUint,
    pub lossy_seed: [u8; 32],
}

impl ServerHello {
    pub fn from_config(preset: ParamPreset, config: &PirConfig, s: usize, rows: usize) -> Self {
        ServerHello {
            preset,
            mode: config.mode,
            keyword_bits: config.keyword_bits as u16,
            k: config.k as u32,
            m: config.m as u64,
            c: config.c as u8,
            s: s as u32,
            rows: rows as u64,
            domain: config.domain.clone(),
            lossy_seed: config.lossy_seed,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(80);
        out.push(self.preset.id());
        out.push(self.mode.id());
        out.extend_from_slice(&self.keyword_bits.to_le_bytes());
        out.extend_from_slice(&self.k.to_le_bytes());
        out.extend_from_slice(&self.m.to_le_bytes());
        out.push(self.c);
        out.extend_from_slice(&self.s.to_le_bytes());
        out.extend_from_slice(&self.rows.to_le_bytes());
        put_blob(&mut out, &self.domain.to_bytes_be());
        out.extend_from_slice(&self.lossy_seed);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, TransportError> {
        let mut r = PayloadReader::new(bytes);
        let preset_id = r.u8()?;
        let preset = ParamPreset::from_id(preset_id)
            .ok_or_else(|| TransportError::protocol(format!("unknown preset {preset_id}")))?;
        let mode_id = r.u8()?;
        let mode = QueryMode::from_id(mode_id)
            .ok_or_else(|| TransportError::protocol(format!("unknown mode {mode_id}")))?;
        let hello = ServerHello {
            preset,
            mode,
            keyword_bits: r.u16()?,
            k: r.u32()?,
            m: r.u64()?,
            c: r.u8()?,
            s: r.u32()?,
            rows: r.u64()?,
            domain: BigUint::from_bytes_be(r.blob()?),
            lossy_seed: r.take(32)?.try_into().unwrap(),
        };
        if !r.is_empty() {
            return Err(TransportError::protocol("trailing bytes in HELLO"));
        }
        Ok(hello)
    }

    /// The code parameters both sides use, after checking that `m` is the
    /// minimal length for the announced domain and weight.
    pub fn to_config(&self) -> Result<PirConfig, TransportError> {
        let params = self.preset.params();
        let k = self.k as usize;
        if k == 0 || self.s == 0 || self.domain.bits() > 24 * k as u64 {
            return Err(TransportError::protocol("implausible server configuration"));
        }
        let m = min_code_length(&self.domain, k);
        if m as u64 != self.m {
            return Err(TransportError::protocol(format!(
                "announced m = {} but CW over the domain needs {m}",
                self.m
            )));
        }
        if u32::from(self.c) > params.degree().trailing_zeros() {
            return Err(TransportError::protocol(format!(
                "compression factor {} too large",
                self.c
            )));
        }
        Ok(PirConfig {
            mode: self.mode,
            keyword_bits: self.keyword_bits as u32,
            domain: self.domain.clone(),
            k,
            m,
            c: self.c as u32,
            degree: params.degree(),
            plain_modulus: params.plain_modulus(),
            lossy_seed: self.lossy_seed,
        })
    }
}

const FLAG_KEYS: u8 = 1;

/// `flags (u8) | [eval keys blob] | count (u32) | ciphertext blobs`. Bit 0 of
/// the flags marks the presence of evaluation keys.
#[derive(Clone, Debug)]
pub struct QueryMessage {
    pub keys: Option<EvalKeySet>,
    pub cts: Vec<BfvCiphertext>,
}

impl QueryMessage {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = vec![if self.keys.is_some() { FLAG_KEYS } else { 0 }];
        if let Some(keys) = &self.keys {
            put_blob(&mut out, &serialize_eval_keys(keys));
        }
        put_cts(&mut out, &self.cts, serialize_ciphertext);
        out
    }

    pub fn decode(bytes: &[u8], params: &BfvParams) -> Result<Self, TransportError> {
        let mut r = PayloadReader::new(bytes);
        let flags = r.u8()?;
        if flags & !FLAG_KEYS != 0 {
            return Err(TransportError::protocol(format!(
                "unknown query flags {flags:#x}"
            )));
        }
        let keys = if flags & FLAG_KEYS != 0 {
            Some(deserialize_eval_keys(r.blob()?, params)?)
        } else {
            None
        };
        let cts = read_cts(&mut r, |b| deserialize_ciphertext(b, params))?;
        Ok(QueryMessage { keys, cts })
    }
}

/// `count (u32) | ciphertext blobs`, each switched down to the first prime.
#[derive(Clone, Debug)]
pub struct ResponseMessage {
    pub cts: Vec<SwitchedCiphertext>,
}

impl ResponseMessage {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        put_cts(&mut out, &self.cts, serialize_switched);
        out
    }

    pub fn decode(bytes: &[u8], params: &BfvParams) -> Result<Self, TransportError> {
        let mut r = PayloadReader::new(bytes);
        Ok(ResponseMessage {
            cts: read_cts(&mut r, |b| deserialize_switched(b, params))?,
        })
    }
}

fn put_cts<C>(out: &mut Vec<u8>, cts: &[C], ser: impl Fn(&C) -> Vec<u8>) {
    out.extend_from_slice(&(cts.len() as u32).to_le_bytes());
    for ct in cts {
        put_blob(out, &ser(ct));
    }
}

fn read_cts<C>(
    r: &mut PayloadReader<'_>,
    de: impl Fn(&[u8]) -> Result<C, cwpir_core::error::HeError>,
) -> Result<Vec<C>, TransportError> {
    let count = r.u32()? as usize;
    // Every ciphertext carries at least a 4-byte length; bounds the allocation.
    let mut cts = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        cts.push(de(r.blob()?)?);
    }
    if !r.is_empty() {
        return Err(TransportError::protocol("trailing bytes after ciphertexts"));
    }
    Ok(cts)
}
