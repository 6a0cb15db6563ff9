//! Seeding. Every random stream in the crate is a ChaCha20 generator whose key
//! is a SHA-256 digest of a purpose tag, the user seed and a task index, so
//! replicate `r` draws the same numbers no matter which worker runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha20Rng;

/// Generator for a top-level call.
pub fn rng_from_seed(seed: u64) -> Rng {
    derived_rng(seed, "root", 0)
}

/// Generator for task `index` of stream `tag` under `seed`.
pub fn derived_rng(seed: u64, tag: &str, index: u64) -> Rng {
    Rng::from_seed(derive_key(seed, tag, index))
}

/// 64-bit seed for task `index`, for handing to APIs that take a plain seed.
pub fn derive_seed(seed: u64, tag: &str, index: u64) -> u64 {
    let k = derive_key(seed, tag, index);
    u64::from_le_bytes(k[..8].try_into().expect("8 bytes"))
}

fn derive_key(seed: u64, tag: &str, index: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"extremogram/v1");
    h.update((tag.len() as u64).to_le_bytes());
    h.update(tag.as_bytes());
    h.update(seed.to_le_bytes());
    h.update(index.to_le_bytes());
    h.finalize().into()
}
