//! Seed fan-out: one master seed, many independent reproducible streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Human-readable statement of the derivation rule, recorded in run manifests.
pub const SEED_RULE: &str =
    "stream_seed = splitmix64(master XOR splitmix64(stream_index + 1)); generator = ChaCha8 seeded via seed_from_u64(stream_seed)";

#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, stream_index: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream_index.wrapping_add(1)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
