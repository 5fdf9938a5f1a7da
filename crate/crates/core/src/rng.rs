//! Counter-based random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the run seed mixed with a
//! purpose tag, positioned on a stream id built from `(iteration, index)`.
//! Streams never depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purpose tags keep unrelated consumers of the same seed apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Rollout = 1,
    Validation = 2,
    Fixture = 3,
    Misc = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream for episode `index` of `iteration`.
pub fn stream(seed: u64, purpose: Purpose, iteration: u64, index: u64) -> StreamRng {
    let key = splitmix64(seed ^ splitmix64(purpose as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(splitmix64(iteration).wrapping_add(index));
    rng
}

pub fn episode_rng(seed: u64, iteration: u64, index: u64) -> StreamRng {
    stream(seed, Purpose::Rollout, iteration, index)
}
