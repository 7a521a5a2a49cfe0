//! Wire protocol, database files, server, client and benchmark reports for
//! constant-weight PIR.

pub mod bench;
pub mod client;
pub mod dbfile;
pub mod error;
pub mod messages;
pub mod server;
pub mod wire;

pub use client::Client;
pub use dbfile::DbFile;
pub use error::TransportError;
pub use server::{ServeOptions, Server, ServerState};
pub use wire::{MessageType, WireFrame};
