//! Deterministic tree of independent random streams.
//!
//! Every consumer of randomness gets its own generator derived from the
//! master seed plus a label path. Streams with different paths never share
//! state, so adding a consumer (or reordering draws inside one) cannot
//! perturb the others. This is what makes runs reproducible down to the
//! byte across agent variants that share the same environment stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derives a generator for `path` under `master_seed`.
///
/// The seed is `SHA-256(master_seed_le || len(label) || label ...)`, so
/// distinct paths give unrelated streams and the mapping is stable across
/// platforms. Same seed and path always yield the same stream.
pub fn rng_tree(master_seed: u64, path: &[&str]) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    for label in path {
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
    }
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}
