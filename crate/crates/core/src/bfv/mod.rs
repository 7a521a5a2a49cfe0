//! Leveled BFV over an RNS ciphertext modulus.
//!
//! Ciphertext multiplication extends both operands to an auxiliary basis
//! large enough to hold the exact tensor product, then divides by `Q/t` with
//! a mixed-radix rounding step. Key switching decomposes over the RNS
//! primes and, within each prime, into `w`-bit digits.

mod ciphertext;
mod client;
mod evaluator;
mod keys;
mod params;
mod rns;
mod sample;
mod serialize;
mod switched;

pub use ciphertext::BfvCiphertext;
pub use client::{keygen, BfvClient};
pub use evaluator::BfvEvaluator;
pub use keys::{EvalKeySet, KeySwitchKey, SecretKey};
pub use params::{BfvParams, ParamPreset};
pub use rns::{RnsBasis, RnsPoly};
pub use serialize::{
    deserialize_ciphertext, deserialize_eval_keys, serialize_ciphertext, serialize_eval_keys,
    serialized_ciphertext_len,
};
pub use switched::{
    deserialize_switched, serialize_switched, serialized_switched_len, SwitchedCiphertext,
};
