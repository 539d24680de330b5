//! Seeded random streams.
//!
//! Every consumer of randomness in a trial (instance generation, the learner's
//! initial guesses, each agent's rewards, each agent's dither) reads from its
//! own ChaCha stream keyed by `(seed, stream id)`. Streams never share state,
//! so the order in which trials or arms are processed cannot change results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

pub const INSTANCE_STREAM: u64 = 0;
pub const LEARNER_STREAM: u64 = 1;
const AGENT_STREAM_BASE: u64 = 1 << 16;
const DITHER_STREAM_BASE: u64 = 1 << 32;

pub fn stream(seed: u64, id: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Reward stream for agent `arm`.
pub fn agent_stream(seed: u64, arm: usize) -> TrialRng {
    stream(seed, AGENT_STREAM_BASE + arm as u64)
}

/// Randomized-rounding stream for agent `arm`, kept apart from its rewards so
/// quantizers with and without dither see identical reward sequences.
pub fn dither_stream(seed: u64, arm: usize) -> TrialRng {
    stream(seed, DITHER_STREAM_BASE + arm as u64)
}

/// SplitMix64 finalizer over `a ^ rotate(b)`; used to derive per-trial seeds.
pub fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.rotate_left(32) ^ 0x9E37_79B9_7F4A_7C15;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
