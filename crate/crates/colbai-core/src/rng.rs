//! Counter-based random number streams for parallel trials.
//!
//! Every source of randomness in this crate is a ChaCha8 stream addressed by a
//! `(seed, stream)` pair. Trial `i` of an experiment with master seed `s` uses
//! stream `(s, i)`; derived experiments (sweep grid points, time-to-target
//! probes) first remap the master seed with [`derive_seed`] so their trial
//! streams never collide with the parent's. Streams are single-owner: a trial
//! consumes its stream sequentially and nothing else touches it.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Identifies the exact stream a trial consumed, for reuse bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct StreamId {
    pub seed: u64,
    pub stream: u64,
}

/// Returns the ChaCha8 stream addressed by `(seed, stream)`.
pub fn trial_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed from `(master, index)` with a SplitMix64 finalizer.
///
/// Used for sweep grid points and per-probe seeds in bisection so that a child
/// run fed `derive_seed(master, index)` as its own master seed reproduces the
/// parent's rows exactly.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        ^ index
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
