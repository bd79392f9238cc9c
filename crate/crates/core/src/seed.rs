//! Seed derivation.
//!
//! Every random stream in a run is derived from one 64-bit run seed by the
//! SplitMix64 finalizer: `mix(seed, [a, b, ..])` folds each part into the
//! state as `state = splitmix64(state ^ part)`, starting from
//! `splitmix64(seed)`. Named streams hash their label bytes (FNV-1a) into a
//! part first. Fading draws are stateless hashes of `(seed, tx, rx, channel,
//! slot)`, so they do not depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn mix(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(seed), |state, &p| splitmix64(state ^ p))
}

pub fn label(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Independent generator for a named purpose within a run.
pub fn stream(seed: u64, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, &[label(name)]))
}

/// Maps a hash to a uniform in (0, 1].
#[inline]
pub fn unit_open(h: u64) -> f64 {
    ((h >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
}
