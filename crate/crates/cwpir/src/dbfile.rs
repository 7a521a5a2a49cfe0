//! On-disk database: a fixed header followed by length-prefixed records.
//!
//! Header: `row_count (u64) | mode (u8) | keyword_bits (u16) | s (u32) | preset (u8)`,
//! all little-endian, 16 bytes. Each record is
//! `key_len (u32) | key | payload_len (u32) | payload`. `s = 0` lets setup
//! choose the smallest `s` that fits.

use std::collections::HashSet;
use std::path::Path;

use cwpir_core::bfv::ParamPreset;
use cwpir_core::protocol::QueryMode;

use crate::wire::{put_blob, PayloadReader};

pub const HEADER_LEN: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum DbFileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("database file truncated")]
    Truncated,
    #[error("unknown query mode {0}")]
    UnknownMode(u8),
    #[error("unknown preset id {0}")]
    UnknownPreset(u8),
    #[error("header announces {announced} rows, file holds {found}")]
    RowCount { announced: u64, found: u64 },
    #[error("duplicate key at records {0} and {1}")]
    DuplicateKey(usize, usize),
    #[error("trailing bytes after the last record")]
    TrailingBytes,
    #[error("keyword length {0} needs a keyword mode")]
    ModeMismatch(u16),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DbFile {
    pub mode: QueryMode,
    /// 0 in index mode.
    pub keyword_bits: u16,
    /// Plaintexts per row; 0 means automatic.
    pub s: u32,
    pub preset: ParamPreset,
    pub records: Vec<(Vec<u8>, Vec<u8>)>,
}

impl DbFile {
    /// Checks mode/length consistency and key distinctness.
    pub fn new(
        mode: QueryMode,
        keyword_bits: u16,
        s: u32,
        preset: ParamPreset,
        records: Vec<(Vec<u8>, Vec<u8>)>,
    ) -> Result<Self, DbFileError> {
        if (mode == QueryMode::Index) != (keyword_bits == 0) {
            return Err(DbFileError::ModeMismatch(keyword_bits));
        }
        check_distinct(&records)?;
        Ok(DbFile {
            mode,
            keyword_bits,
            s,
            preset,
            records,
        })
    }

    pub fn serialize(&self) -> Vec<u8> {
        let body: usize = self
            .records
            .iter()
            .map(|(k, p)| 8 + k.len() + p.len())
            .sum();
        let mut out = Vec::with_capacity(HEADER_LEN + body);
        out.extend_from_slice(&(self.records.len() as u64).to_le_bytes());
        out.push(self.mode.id());
        out.extend_from_slice(&self.keyword_bits.to_le_bytes());
        out.extend_from_slice(&self.s.to_le_bytes());
        out.push(self.preset.id());
        for (key, payload) in &self.records {
            put_blob(&mut out, key);
            put_blob(&mut out, payload);
        }
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, DbFileError> {
        let mut r = PayloadReader::new(bytes);
        let truncated = |_| DbFileError::Truncated;
        let count = r.u64().map_err(truncated)?;
        let mode_id = r.u8().map_err(truncated)?;
        let keyword_bits = r.u16().map_err(truncated)?;
        let s = r.u32().map_err(truncated)?;
        let preset_id = r.u8().map_err(truncated)?;
        let mode = QueryMode::from_id(mode_id).ok_or(DbFileError::UnknownMode(mode_id))?;
        let preset =
            ParamPreset::from_id(preset_id).ok_or(DbFileError::UnknownPreset(preset_id))?;
        let mut records = Vec::new();
        while !r.is_empty() {
            let key = r.blob().map_err(truncated)?.to_vec();
            let payload = r.blob().map_err(truncated)?.to_vec();
            records.push((key, payload));
            if records.len() as u64 > count {
                return Err(DbFileError::TrailingBytes);
            }
        }
        if records.len() as u64 != count {
            return Err(DbFileError::RowCount {
                announced: count,
                found: records.len() as u64,
            });
        }
        Self::new(mode, keyword_bits, s, preset, records)
    }

    pub fn load(path: &Path) -> Result<Self, DbFileError> {
        Self::parse(&std::fs::read(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), DbFileError> {
        Ok(std::fs::write(path, self.serialize())?)
    }
}

fn check_distinct(records: &[(Vec<u8>, Vec<u8>)]) -> Result<(), DbFileError> {
    let mut seen = std::collections::HashMap::with_capacity(records.len());
    for (i, (key, _)) in records.iter().enumerate() {
        if let Some(j) = seen.insert(key.as_slice(), i) {
            return Err(DbFileError::DuplicateKey(j, i));
        }
    }
    Ok(())
}

/// `n` random records. Index mode uses the decimal position as key;
/// keyword modes draw distinct keys below `2^keyword_bits` (big-endian,
/// `ceil(bits / 8)` bytes). Payloads are `payload_len` random non-zero-led bytes.
pub fn random_records<R: rand::Rng>(
    rng: &mut R,
    n: usize,
    mode: QueryMode,
    keyword_bits: u16,
    payload_len: usize,
) -> Vec<(Vec<u8>, Vec<u8>)> {
    let mut keys = HashSet::with_capacity(n);
    let width = (keyword_bits as usize).div_ceil(8);
    (0..n)
        .map(|i| {
            let key = match mode {
                QueryMode::Index => i.to_string().into_bytes(),
                _ => loop {
                    let mut k = vec![0u8; width];
                    rng.fill(&mut k[..]);
                    let excess = width * 8 - keyword_bits as usize;
                    if excess > 0 {
                        k[0] &= 0xff >> excess;
                    }
                    if keys.insert(k.clone()) {
                        break k;
                    }
                },
            };
            let mut payload = vec![0u8; payload_len.max(1)];
            rng.fill(&mut payload[..]);
            payload[0] |= 1;
            (key, payload)
        })
        .collect()
}
