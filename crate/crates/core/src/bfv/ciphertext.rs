use std::sync::{Arc, OnceLock};

use super::params::BfvParams;
use super::rns::RnsPoly;

/// Two polynomials over `Q` in coefficient form.
///
/// A fresh secret-key encryption remembers the seed of its uniform part so
/// that it can be serialized without `c1`.
#[derive(Clone, Debug)]
pub struct BfvCiphertext {
    pub(crate) params: BfvParams,
    pub(crate) c: [RnsPoly; 2],
    pub(crate) depth: u32,
    pub(crate) seed: Option<[u8; 32]>,
    // NTT images of both components over the extended basis, shared by
    // clones since components never change after construction
    pub(crate) lifted: Arc<OnceLock<Arc<[RnsPoly; 2]>>>,
}

impl PartialEq for BfvCiphertext {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.c == other.c
    }
}

impl Eq for BfvCiphertext {}

impl BfvCiphertext {
    pub(crate) fn new(params: &BfvParams, c: [RnsPoly; 2], depth: u32) -> Self {
        BfvCiphertext {
            params: params.clone(),
            c,
            depth,
            seed: None,
            lifted: Arc::default(),
        }
    }

    pub fn params(&self) -> &BfvParams {
        &self.params
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn seed(&self) -> Option<&[u8; 32]> {
        self.seed.as_ref()
    }

    pub fn components(&self) -> &[RnsPoly; 2] {
        &self.c
    }
}
