//! Deterministic seed derivation: one top-level seed is split into
//! independent streams by fixed labels and counters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the subsystem named `label`.
pub fn for_label(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, folded into the seed.
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    splitmix64(seed ^ splitmix64(h))
}

/// Seed for element `counters` of a stream, e.g. `[epoch, positive_index]`.
pub fn for_counters(seed: u64, counters: &[u64]) -> u64 {
    counters
        .iter()
        .fold(splitmix64(seed), |acc, &c| splitmix64(acc ^ splitmix64(c.wrapping_add(1))))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
