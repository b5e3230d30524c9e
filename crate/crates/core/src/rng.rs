//! Seed derivation.
//!
//! Every random draw in a run traces back to one 64-bit master seed:
//!
//! * replicate `r` of an ensemble runs with `derive_seed(base_seed, r)`;
//! * a grid cell hashes its canonical parameter tuple into its base seed
//!   (see [`seed_for_key`]);
//! * inside a population, stream 0 of `ChaCha8Rng::seed_from_u64(seed)`
//!   draws initial attitudes and stream `i + 1` belongs to agent `i`.
//!
//! Agents never share a stream, so results do not depend on the order in
//! which agents are visited or on how replicates are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed number `index` of `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    mix64(base ^ mix64(index))
}

/// Folds a sequence of words into `base`; order-sensitive.
pub fn seed_for_key(base: u64, words: &[u64]) -> u64 {
    words.iter().fold(mix64(base), |acc, &w| mix64(acc ^ mix64(w)))
}

pub(crate) const INIT_STREAM: u64 = 0;

/// Independent ChaCha stream `stream` under `seed`.
pub fn stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn agent_stream(seed: u64, agent: usize) -> SimRng {
    stream(seed, agent as u64 + 1)
}
