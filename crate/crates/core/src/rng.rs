//! Counter-based random streams.
//!
//! Every event (or trial, or run) draws from its own ChaCha8 stream selected by
//! `(seed, domain, index)`. The stream for index `i` does not depend on how many
//! other indices were generated before it or on which thread generated them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domains separate the streams of unrelated consumers sharing a seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    BornEvent = 1,
    ImpulsiveRun = 2,
    SemiclassicalEvent = 3,
    PointerTrial = 4,
    PointerSystem = 5,
}

/// Returns the random stream for `index` under `(seed, domain)`.
pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    key[16..24].copy_from_slice(b"pscat-v1");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
