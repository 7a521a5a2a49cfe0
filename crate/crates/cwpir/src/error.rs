use cwpir_core::error::{HeError, PirError};

use crate::dbfile::DbFileError;
use crate::wire::WireError;

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    DbFile(#[from] DbFileError),
    #[error(transparent)]
    Pir(#[from] PirError),
    #[error(transparent)]
    He(#[from] HeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("server error: {0}")]
    Remote(String),
}

impl TransportError {
    pub fn protocol(msg: impl Into<String>) -> Self {
        TransportError::Protocol(msg.into())
    }
}
