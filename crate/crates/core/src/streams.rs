//! Deterministic random substreams.
//!
//! Every random draw in the crate comes from a stream identified by a tuple
//! `(seed, quantity, key, chunk, role)`. Chunks can then be evaluated on any
//! number of workers while the merged result stays bit-identical.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Which draw inside a Monte Carlo sample a stream feeds. Keeping inputs,
/// gains and noise on separate streams keeps them aligned across grid points
/// even when one of them consumes a different number of variates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Input = 1,
    Gains = 2,
    Noise = 3,
    Inner = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive hash of the stream coordinates.
pub fn derive_key(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(seed), |h, &p| splitmix64(h ^ splitmix64(p)))
}

/// Substream for one chunk of one estimator.
pub fn substream(seed: u64, quantity: u64, key: u64, chunk: u64, role: Role) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_key(seed, &[quantity, key, chunk, role as u64]))
}

/// Single stream for ad hoc use (tests, randomized verification cases).
pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed))
}
