//! Threaded TCP server: one thread per connection, the database shared
//! read-only. Malformed frames get an ERROR reply and the connection stays
//! open unless the stream lost framing (bad magic, truncation).

use std::io::BufReader;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::Arc;
use std::thread::JoinHandle;

use cwpir_core::bfv::{BfvEvaluator, BfvParams, ParamPreset};
use cwpir_core::error::PirError;
use cwpir_core::expansion::PackedQuery;
use cwpir_core::he::expansion_galois_elements;
use cwpir_core::protocol::{process, PirConfig, PirDatabase, QueryMode};

use crate::dbfile::DbFile;
use crate::error::TransportError;
use crate::messages::{QueryMessage, ResponseMessage, ServerHello};
use crate::wire::{MessageType, WireError, WireFrame, DEFAULT_MAX_PAYLOAD};

/// Lossy-mode seeds tried before giving up on a collision-free mapping.
const RESEED_ATTEMPTS: usize = 16;

/// Longest code a query may expand to; every position becomes one
/// ciphertext held in memory while the query is processed.
pub const MAX_CODE_LENGTH: usize = 1 << 16;

#[derive(Clone, Debug)]
pub struct ServeOptions {
    pub k: Option<usize>,
    pub c: Option<u32>,
    /// Overrides the preset stored in the database file.
    pub preset: Option<ParamPreset>,
    pub max_frame: usize,
}

impl Default for ServeOptions {
    fn default() -> Self {
        ServeOptions {
            k: None,
            c: None,
            preset: None,
            max_frame: DEFAULT_MAX_PAYLOAD,
        }
    }
}

/// Everything a connection needs, built once at startup.
#[derive(Debug)]
pub struct ServerState {
    params: BfvParams,
    db: PirDatabase,
    hello: ServerHello,
    max_frame: usize,
}

impl ServerState {
    /// Runs the offline setup. Lossy databases draw a fresh hash seed and
    /// redraw it when two keys collide.
    pub fn setup(file: &DbFile, opts: &ServeOptions) -> Result<Self, TransportError> {
        let preset = opts.preset.unwrap_or(file.preset);
        let params = preset.params();
        let he = params.he_params();
        let budget = preset.pir_depth_budget();
        let s = (file.s > 0).then_some(file.s as usize);
        let build = |seed: [u8; 32]| match file.mode {
            QueryMode::Index => PirConfig::index(file.records.len(), opts.k, opts.c, he, budget),
            mode => PirConfig::keyword(
                file.keyword_bits as u32,
                mode,
                opts.k,
                opts.c,
                he,
                budget,
                seed,
            ),
        };
        let mut attempts = 0;
        let db = loop {
            let config = build(rand::random())?;
            if config.m > MAX_CODE_LENGTH {
                return Err(TransportError::protocol(format!(
                    "code length {} exceeds {MAX_CODE_LENGTH}; raise k or shrink the keyword length",
                    config.m
                )));
            }
            match PirDatabase::setup(&file.records, &config, he, s) {
                Err(PirError::CodewordCollision(..))
                    if file.mode == QueryMode::LossyKeyword && attempts < RESEED_ATTEMPTS =>
                {
                    attempts += 1;
                }
                other => break other?,
            }
        };
        let hello = ServerHello::from_config(preset, db.config(), db.s(), db.len());
        Ok(ServerState {
            params,
            db,
            hello,
            max_frame: opts.max_frame,
        })
    }

    pub fn hello(&self) -> &ServerHello {
        &self.hello
    }

    pub fn database(&self) -> &PirDatabase {
        &self.db
    }

    fn answer(
        &self,
        eval: &mut Option<BfvEvaluator>,
        payload: &[u8],
    ) -> Result<WireFrame, TransportError> {
        let msg = QueryMessage::decode(payload, &self.params)?;
        if let Some(keys) = msg.keys {
            let config = self.db.config();
            let missing = expansion_galois_elements(config.degree, config.c)
                .into_iter()
                .find(|&g| !keys.has_galois(g));
            if let Some(g) = missing {
                return Err(TransportError::protocol(format!(
                    "evaluation keys lack Galois element {g}"
                )));
            }
            if config.k > 1 && !keys.has_relin() {
                return Err(TransportError::protocol(
                    "evaluation keys lack a relinearization key",
                ));
            }
            *eval = Some(BfvEvaluator::new(Arc::new(keys)));
        }
        let eval = eval
            .as_ref()
            .ok_or_else(|| TransportError::protocol("first query must carry evaluation keys"))?;
        let config = self.db.config();
        let expected = config.upload_count();
        if msg.cts.len() != expected {
            return Err(PirError::WrongCiphertextCount {
                expected,
                got: msg.cts.len(),
            }
            .into());
        }
        let query = PackedQuery {
            cts: msg.cts,
            c: config.c,
            m: config.m,
        };
        let response = process(eval, &query, &self.db)?;
        Ok(WireFrame::new(
            MessageType::Response,
            ResponseMessage {
                cts: response
                    .cts
                    .iter()
                    .map(|c| c.switch_to_first_prime())
                    .collect(),
            }
            .encode(),
        ))
    }

    /// Serves one connection until the peer closes it or framing is lost.
    pub fn handle(&self, stream: TcpStream) -> Result<(), TransportError> {
        let mut reader = BufReader::new(stream.try_clone()?);
        let mut writer = stream;
        // Evaluation keys live as long as the connection.
        let mut eval = None;
        loop {
            let frame = match WireFrame::read_from(&mut reader, self.max_frame) {
                Ok(Some(frame)) => frame,
                Ok(None) => return Ok(()),
                Err(e) if e.recoverable() => {
                    WireFrame::error(&e).write_to(&mut writer)?;
                    continue;
                }
                Err(WireError::BadMagic) => {
                    let _ = WireFrame::error(WireError::BadMagic).write_to(&mut writer);
                    return Err(WireError::BadMagic.into());
                }
                Err(e) => return Err(e.into()),
            };
            let reply = match frame.kind {
                MessageType::Hello => WireFrame::new(MessageType::Hello, self.hello.encode()),
                MessageType::Query => self
                    .answer(&mut eval, &frame.payload)
                    .unwrap_or_else(WireFrame::error),
                other => WireFrame::error(format!("unexpected {other:?} frame")),
            };
            reply.write_to(&mut writer)?;
        }
    }
}

/// A bound listener; connections are served on their own threads.
pub struct Server {
    listener: TcpListener,
    state: Arc<ServerState>,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, state: ServerState) -> Result<Self, TransportError> {
        Ok(Server {
            listener: TcpListener::bind(addr)?,
            state: Arc::new(state),
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr, TransportError> {
        Ok(self.listener.local_addr()?)
    }

    pub fn state(&self) -> &Arc<ServerState> {
        &self.state
    }

    /// Accepts connections forever.
    pub fn run(self) -> Result<(), TransportError> {
        for stream in self.listener.incoming() {
            let stream = stream?;
            let state = Arc::clone(&self.state);
            std::thread::spawn(move || {
                let _ = stream.set_nodelay(true);
                let _ = state.handle(stream);
            });
        }
        Ok(())
    }

    /// Runs [`Server::run`] on a background thread.
    pub fn spawn(self) -> JoinHandle<Result<(), TransportError>> {
        std::thread::spawn(move || self.run())
    }
}
