//! Stable sub-seed derivation.
//!
//! Every random stream in the crate is seeded from a master seed mixed with a
//! tuple of identifying parts through SHA-256, so seeds do not depend on
//! platform, thread count or iteration order.

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use sha2::{Digest, Sha256};

/// Derive a 64-bit seed from `master` and an ordered list of string/integer parts.
pub fn derive(master: u64, parts: &[&dyn SeedPart]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    for part in parts {
        part.feed(&mut hasher);
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub trait SeedPart {
    fn feed(&self, hasher: &mut Sha256);
}

impl SeedPart for str {
    fn feed(&self, hasher: &mut Sha256) {
        hasher.update((self.len() as u64).to_le_bytes());
        hasher.update(self.as_bytes());
    }
}

impl SeedPart for &str {
    fn feed(&self, hasher: &mut Sha256) {
        (**self).feed(hasher)
    }
}

impl SeedPart for u64 {
    fn feed(&self, hasher: &mut Sha256) {
        hasher.update([0xff]);
        hasher.update(self.to_le_bytes());
    }
}

impl SeedPart for usize {
    fn feed(&self, hasher: &mut Sha256) {
        (*self as u64).feed(hasher)
    }
}

/// Hex-encoded SHA-256 of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
