//! Seeded random streams.
//!
//! Every random decision in the crate draws from a `ChaCha8Rng` whose seed is
//! derived from the user seed plus a path of labels, e.g.
//! `(seed, "forest", tree_index)`. Derivation folds each component through the
//! SplitMix64 finalizer, so streams are independent of scheduling order and
//! identical across platforms.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fold(acc: u64, word: u64) -> u64 {
    splitmix64(acc ^ splitmix64(word))
}

/// FNV-1a; stable label hashing independent of `std::hash` randomization.
fn label_hash(label: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01B3);
    }
    h
}

/// Derives a child seed from a parent seed, a label and numeric indices.
pub fn derive_seed(seed: u64, label: &str, indices: &[u64]) -> u64 {
    let mut acc = fold(seed, label_hash(label));
    for &i in indices {
        acc = fold(acc, i);
    }
    acc
}

pub fn stream(seed: u64, label: &str, indices: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, label, indices))
}

/// Fisher–Yates permutation of `0..n` driven by the `(seed, label)` stream.
pub fn permutation(n: usize, seed: u64, label: &str) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream(seed, label, &[]));
    idx
}
