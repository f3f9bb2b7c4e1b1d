//! Seeded, splittable random streams.
//!
//! Every Monte-Carlo trial draws from its own ChaCha8 stream keyed by
//! `(seed, trial, lane)`, so any trial can be replayed in isolation and the
//! result does not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent roles within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Lane {
    Channel = 1,
    Frame = 2,
    Noise = 3,
    Data = 4,
    Misc = 5,
}

pub fn substream(seed: u64, trial: u64, lane: Lane) -> ChaCha8Rng {
    substream_raw(seed, trial, lane as u64)
}

pub fn substream_raw(seed: u64, trial: u64, lane: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    key[16..24].copy_from_slice(&lane.to_le_bytes());
    key[24..].copy_from_slice(b"thz-sim\0");
    ChaCha8Rng::from_seed(key)
}
