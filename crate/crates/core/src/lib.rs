//! Constant-weight keyword PIR over a leveled RLWE backend.

pub mod bfv;
pub mod cost_model;
pub mod cw_code;
pub mod eq_circuits;
pub mod error;
pub mod expansion;
pub mod he;
mod par;
pub mod protocol;
pub mod ring;

pub use error::{CodeError, EqError, HeError, PirError, RingError};
