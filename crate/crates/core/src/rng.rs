//! Deterministic RNG stream derivation.
//!
//! Every stochastic stage of a run draws from its own ChaCha stream derived
//! from the run seed plus a purpose tag and integer coordinates (iteration,
//! candidate index, ...). Streams are therefore independent of scheduling
//! order, which is what makes checkpoint resume and parallel candidate
//! evaluation bit-reproducible.

use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::SeedableRng;
use sha2::{Digest, Sha256};

fn derive_key(seed: u64, tag: &str, coords: &[u64]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update([tag.len() as u8]);
    hasher.update(tag.as_bytes());
    for c in coords {
        hasher.update(c.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    key
}

/// Derive an independent RNG stream from `(seed, tag, coords)`.
pub fn derive_rng(seed: u64, tag: &str, coords: &[u64]) -> ChaCha12Rng {
    ChaCha12Rng::from_seed(derive_key(seed, tag, coords))
}

/// Derive a child seed (for APIs that take a u64 instead of an RNG).
pub fn derive_seed(seed: u64, tag: &str, coords: &[u64]) -> u64 {
    let key = derive_key(seed, tag, coords);
    u64::from_le_bytes(key[..8].try_into().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngExt;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = derive_rng(7, "eval", &[3, 1]);
        let mut b = derive_rng(7, "eval", &[3, 1]);
        let mut c = derive_rng(7, "eval", &[3, 2]);
        let mut d = derive_rng(7, "mutate", &[3, 1]);
        let xa: u64 = a.random();
        assert_eq!(xa, b.random::<u64>());
        assert_ne!(xa, c.random::<u64>());
        assert_ne!(xa, d.random::<u64>());
    }

    #[test]
    fn tag_boundaries_do_not_collide() {
        // ("ab", [1]) must differ from ("a", [?]) style confusions.
        let mut a = derive_rng(0, "ab", &[]);
        let mut b = derive_rng(0, "a", &[b'b' as u64]);
        assert_ne!(a.random::<u64>(), b.random::<u64>());
    }
}
