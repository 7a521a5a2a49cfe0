//! Length-prefixed frames: `"CWP1" | version | type | len (u32 LE) | payload`.

use std::io::{self, Read, Write};

pub const MAGIC: &[u8; 4] = b"CWP1";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 10;
/// Default cap on one frame's payload; evaluation keys at N = 16384 are the
/// largest legitimate payload.
pub const DEFAULT_MAX_PAYLOAD: usize = 256 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MessageType {
    Hello,
    Query,
    Response,
    Error,
}

impl MessageType {
    pub const ALL: [MessageType; 4] = [
        MessageType::Hello,
        MessageType::Query,
        MessageType::Response,
        MessageType::Error,
    ];

    pub fn code(self) -> u8 {
        match self {
            MessageType::Hello => 1,
            MessageType::Query => 2,
            MessageType::Response => 3,
            MessageType::Error => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.code() == code)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum WireError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad frame magic")]
    BadMagic,
    #[error("unsupported protocol version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown message type {0}")]
    UnknownType(u8),
    #[error("frame payload of {len} bytes exceeds the {cap}-byte cap")]
    Oversized { len: usize, cap: usize },
    #[error("frame truncated")]
    Truncated,
}

impl WireError {
    /// The stream is still aligned on a frame boundary after this error.
    pub fn recoverable(&self) -> bool {
        matches!(
            self,
            WireError::UnsupportedVersion(_)
                | WireError::UnknownType(_)
                | WireError::Oversized { .. }
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WireFrame {
    pub kind: MessageType,
    pub payload: Vec<u8>,
}

impl WireFrame {
    pub fn new(kind: MessageType, payload: Vec<u8>) -> Self {
        WireFrame { kind, payload }
    }

    pub fn error(msg: impl std::fmt::Display) -> Self {
        WireFrame::new(MessageType::Error, msg.to_string().into_bytes())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(self.kind.code());
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses one frame from the front of `bytes`, returning it and the bytes consumed.
    pub fn decode(bytes: &[u8], max_payload: usize) -> Result<(WireFrame, usize), WireError> {
        if bytes.len() < HEADER_LEN {
            return Err(WireError::Truncated);
        }
        let (kind, len) = parse_header(bytes[..HEADER_LEN].try_into().unwrap(), max_payload)?;
        let end = HEADER_LEN + len;
        if bytes.len() < end {
            return Err(WireError::Truncated);
        }
        Ok((WireFrame::new(kind, bytes[HEADER_LEN..end].to_vec()), end))
    }

    pub fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        w.write_all(&self.encode())?;
        w.flush()
    }

    /// Reads one frame. `Ok(None)` on a clean end of stream before a header.
    ///
    /// On a recoverable error the offending payload has been consumed, so the
    /// next call starts at the following frame.
    pub fn read_from(
        r: &mut impl Read,
        max_payload: usize,
    ) -> Result<Option<WireFrame>, WireError> {
        let mut header = [0u8; HEADER_LEN];
        let mut got = 0;
        while got < HEADER_LEN {
            match r.read(&mut header[got..]) {
                Ok(0) if got == 0 => return Ok(None),
                Ok(0) => return Err(WireError::Truncated),
                Ok(n) => got += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        let (kind, len) = match parse_header(&header, max_payload) {
            Ok(v) => v,
            Err(e @ WireError::BadMagic) => return Err(e),
            Err(e) => {
                let len = u32::from_le_bytes(header[6..10].try_into().unwrap()) as u64;
                if io::copy(&mut r.take(len), &mut io::sink())? < len {
                    return Err(WireError::Truncated);
                }
                return Err(e);
            }
        };
        let mut payload = vec![0u8; len];
        r.read_exact(&mut payload).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => WireError::Truncated,
            _ => e.into(),
        })?;
        Ok(Some(WireFrame::new(kind, payload)))
    }
}

fn parse_header(
    h: &[u8; HEADER_LEN],
    max_payload: usize,
) -> Result<(MessageType, usize), WireError> {
    if &h[..4] != MAGIC {
        return Err(WireError::BadMagic);
    }
    if h[4] != VERSION {
        return Err(WireError::UnsupportedVersion(h[4]));
    }
    let kind = MessageType::from_code(h[5]).ok_or(WireError::UnknownType(h[5]))?;
    let len = u32::from_le_bytes(h[6..10].try_into().unwrap()) as usize;
    if len > max_payload {
        return Err(WireError::Oversized {
            len,
            cap: max_payload,
        });
    }
    Ok((kind, len))
}

/// Cursor over a payload with the little-endian readers the messages need.
pub struct PayloadReader<'a> {
    buf: &'a [u8],
}

impl<'a> PayloadReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        PayloadReader { buf }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.buf.len() < n {
            return Err(WireError::Truncated);
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    pub fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, WireError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// `u32` length followed by that many bytes.
    pub fn blob(&mut self) -> Result<&'a [u8], WireError> {
        let len = self.u32()? as usize;
        self.take(len)
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }
}

pub fn put_blob(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
    out.extend_from_slice(bytes);
}
