//! Per-record seed derivation.
//!
//! Every random decision in the pipeline is taken by an RNG seeded from
//! `(global_seed, record_id)`, so results do not depend on processing order or
//! thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The RNG used throughout the pipeline. ChaCha output is stable across
/// platforms and crate releases, which `StdRng` does not promise.
pub type PipelineRng = ChaCha8Rng;

/// Derives a 64-bit seed from the global seed and a record identifier.
pub fn derive_seed(global_seed: u64, record_id: &str) -> u64 {
    let digest = Sha256::new()
        .chain_update(global_seed.to_le_bytes())
        .chain_update(record_id.as_bytes())
        .finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(head)
}

/// Builds the RNG for one record.
pub fn record_rng(global_seed: u64, record_id: &str) -> PipelineRng {
    PipelineRng::seed_from_u64(derive_seed(global_seed, record_id))
}

/// Builds an RNG directly from a seed.
pub fn seeded_rng(seed: u64) -> PipelineRng {
    PipelineRng::seed_from_u64(seed)
}
