//! Keyed random substreams.
//!
//! Every random draw in an evaluation comes from a stream whose seed is a hash
//! of a master seed and a tuple of keys. A draw therefore depends only on what
//! it is for, never on which worker produced it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// One component of a substream key.
#[derive(Debug, Clone, Copy)]
pub enum Key<'a> {
    Int(u64),
    Str(&'a str),
}

impl From<u64> for Key<'_> {
    fn from(v: u64) -> Self {
        Key::Int(v)
    }
}

impl From<usize> for Key<'_> {
    fn from(v: usize) -> Self {
        Key::Int(v as u64)
    }
}

impl From<u32> for Key<'_> {
    fn from(v: u32) -> Self {
        Key::Int(u64::from(v))
    }
}

impl<'a> From<&'a str> for Key<'a> {
    fn from(v: &'a str) -> Self {
        Key::Str(v)
    }
}

/// Derive an independent generator from `seed` and a key tuple.
pub fn substream(seed: u64, keys: &[Key<'_>]) -> StreamRng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    for key in keys {
        match key {
            Key::Int(v) => {
                hasher.update([0u8]);
                hasher.update(v.to_le_bytes());
            }
            Key::Str(s) => {
                hasher.update([1u8]);
                hasher.update((s.len() as u64).to_le_bytes());
                hasher.update(s.as_bytes());
            }
        }
    }
    let digest: [u8; 32] = hasher.finalize().into();
    ChaCha8Rng::from_seed(digest)
}

/// Plain seeded generator for single-stream uses.
pub fn seeded(seed: u64) -> StreamRng {
    substream(seed, &[])
}
