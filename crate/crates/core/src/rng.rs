//! Counter-based random substreams.
//!
//! Every trial owns a family of ChaCha8 streams addressed by
//! `(trial, purpose)`, so the randomness a trial sees never depends on which
//! worker thread ran it or in which order trials were scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// What a substream is used for. Values are part of the reproducibility
/// contract; append new purposes at the end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Users = 0,
    DistributedChannels = 1,
    CentralizedChannels = 2,
    TssaNoise = 3,
    OsesDistributedNoise = 4,
    OsesCentralizedNoise = 5,
    UplinkNoise = 7,
    Scratch = 8,
}

const PURPOSES: u64 = 16;

/// Derives the substream for `(trial, purpose)` from the master seed.
pub fn substream(master_seed: u64, trial: u64, purpose: Purpose) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial.wrapping_mul(PURPOSES).wrapping_add(purpose as u64));
    rng
}

/// Like [`substream`] with an extra sub-index folded into the purpose slot,
/// for per-method noise streams that must be distinct across methods.
pub fn substream_indexed(master_seed: u64, trial: u64, purpose: Purpose, index: u64) -> SimRng {
    let mut rng = substream(master_seed, trial, purpose);
    // 2^32 words per index keeps sub-indexed streams disjoint in practice.
    rng.set_word_pos((index as u128) << 32);
    rng
}
