//! Retrieval client: HELLO once per connection, then one QUERY/RESPONSE
//! exchange per lookup. Evaluation keys ride along with the first query.

use std::io::BufReader;
use std::net::{TcpStream, ToSocketAddrs};

use num_bigint::BigUint;

use cwpir_core::bfv::{BfvClient, BfvParams};
use cwpir_core::cw_code::Codeword;
use cwpir_core::he::expansion_galois_elements;
use cwpir_core::protocol::{build_query, unpack_row, PirConfig, QueryMode};

use crate::error::TransportError;
use crate::messages::{QueryMessage, ResponseMessage, ServerHello};
use crate::wire::{MessageType, WireFrame, DEFAULT_MAX_PAYLOAD};

pub struct Client {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    hello: ServerHello,
    config: PirConfig,
    params: BfvParams,
    bfv: BfvClient,
    keys_sent: bool,
}

impl Client {
    /// Connects, exchanges HELLO and generates a fresh secret key.
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self, TransportError> {
        Self::connect_with_seed(addr, rand::random())
    }

    /// Like [`Client::connect`] with a caller-chosen key seed.
    pub fn connect_with_seed(
        addr: impl ToSocketAddrs,
        seed: [u8; 32],
    ) -> Result<Self, TransportError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let mut reader = BufReader::new(stream.try_clone()?);
        let mut writer = stream;
        WireFrame::new(MessageType::Hello, Vec::new()).write_to(&mut writer)?;
        let frame = expect(&mut reader, MessageType::Hello)?;
        let hello = ServerHello::decode(&frame.payload)?;
        let config = hello.to_config()?;
        let params = hello.preset.params();
        let bfv = BfvClient::new(&params, seed);
        Ok(Client {
            reader,
            writer,
            hello,
            config,
            params,
            bfv,
            keys_sent: false,
        })
    }

    pub fn hello(&self) -> &ServerHello {
        &self.hello
    }

    pub fn config(&self) -> &PirConfig {
        &self.config
    }

    /// Row `i` of an index-mode database.
    pub fn retrieve_index(&mut self, i: usize) -> Result<Option<Vec<u8>>, TransportError> {
        let word = self.config.index_codeword(i)?;
        self.retrieve_codeword(&word)
    }

    /// Payload stored under `key`, or `None` when the server holds no such key.
    pub fn retrieve_keyword(&mut self, key: &[u8]) -> Result<Option<Vec<u8>>, TransportError> {
        let word = self.config.keyword_codeword(key)?;
        self.retrieve_codeword(&word)
    }

    /// Interprets `key` according to the server's mode: a decimal row number
    /// in index mode, raw identifier bytes otherwise.
    pub fn retrieve(&mut self, key: &[u8]) -> Result<Option<Vec<u8>>, TransportError> {
        match self.config.mode {
            QueryMode::Index => {
                let i = std::str::from_utf8(key)
                    .ok()
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(|| {
                        TransportError::protocol("index mode expects a decimal row number")
                    })?;
                self.retrieve_index(i)
            }
            _ => self.retrieve_keyword(key),
        }
    }

    fn retrieve_codeword(&mut self, word: &Codeword) -> Result<Option<Vec<u8>>, TransportError> {
        let he = self.params.he_params();
        let query = build_query(&self.bfv, &self.config, he, word)?;
        let keys = (!self.keys_sent).then(|| {
            self.bfv.eval_keys(&expansion_galois_elements(
                self.config.degree,
                self.config.c,
            ))
        });
        let msg = QueryMessage {
            keys,
            cts: query.cts,
        };
        WireFrame::new(MessageType::Query, msg.encode()).write_to(&mut self.writer)?;
        self.keys_sent = true;
        let frame = expect(&mut self.reader, MessageType::Response)?;
        let resp = ResponseMessage::decode(&frame.payload, &self.params)?;
        if resp.cts.len() != self.hello.s as usize {
            return Err(TransportError::protocol(format!(
                "expected {} response ciphertexts, got {}",
                self.hello.s,
                resp.cts.len()
            )));
        }
        let plains = resp
            .cts
            .iter()
            .map(|c| self.bfv.decrypt_switched(c))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(unpack_row(&plains, he)?)
    }
}

fn expect(
    reader: &mut BufReader<TcpStream>,
    kind: MessageType,
) -> Result<WireFrame, TransportError> {
    let frame = WireFrame::read_from(reader, DEFAULT_MAX_PAYLOAD)?
        .ok_or_else(|| TransportError::protocol("connection closed"))?;
    match frame.kind {
        k if k == kind => Ok(frame),
        MessageType::Error => Err(TransportError::Remote(
            String::from_utf8_lossy(&frame.payload).into_owned(),
        )),
        other => Err(TransportError::protocol(format!(
            "expected {kind:?}, got {other:?}"
        ))),
    }
}

/// Parses a keyword given on the command line: `0x`-prefixed hex bytes, a
/// decimal integer (keyword mode, big-endian minimal bytes), or the raw
/// UTF-8 text (lossy mode).
pub fn parse_key(text: &str, mode: QueryMode) -> Result<Vec<u8>, TransportError> {
    if let Some(hex) = text.strip_prefix("0x") {
        return decode_hex(hex)
            .ok_or_else(|| TransportError::protocol(format!("invalid hex key {text:?}")));
    }
    match mode {
        QueryMode::Keyword => text
            .parse::<BigUint>()
            .map(|x| x.to_bytes_be())
            .map_err(|_| {
                TransportError::protocol(format!("keyword mode expects an integer, got {text:?}"))
            }),
        _ => Ok(text.as_bytes().to_vec()),
    }
}

pub fn decode_hex(hex: &str) -> Option<Vec<u8>> {
    if !hex.len().is_multiple_of(2) {
        return None;
    }
    (0..hex.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(hex.get(i..i + 2)?, 16).ok())
        .collect()
}

pub fn encode_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
