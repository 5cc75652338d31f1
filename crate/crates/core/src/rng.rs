//! Seed derivation. Every randomized operation draws from its own stream so
//! that adding draws to one stage never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const STREAM_PLACEMENT: u64 = 1;
pub(crate) const STREAM_CHANNEL: u64 = 2;
pub(crate) const STREAM_SUBCHANNEL: u64 = 3;
pub(crate) const STREAM_SERVERS: u64 = 4;
pub(crate) const STREAM_USERS: u64 = 5;
pub(crate) const STREAM_WORKLOAD: u64 = 6;
pub(crate) const STREAM_STRATEGY: u64 = 7;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed ^ mix(stream)))
}
