//! Seed derivation for the RNG streams used across the pipeline.
//!
//! Every random decision (split shuffling, corruption draws, bottleneck
//! noise, sampling during decoding) gets its own stream, keyed by a root seed
//! plus a label and an index. Streams therefore never interfere: adding a
//! consumer in one place cannot shift the draws of another, which is what
//! keeps whole-pipeline reruns byte-identical.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Derives a child seed from `root` for the stream named `label`/`index`.
///
/// The mix is fnv-1a over the label folded into splitmix64. Both are fixed
/// algorithms with no dependency on library versions, so derived seeds are
/// stable across builds.
pub fn derive_seed(root: u64, label: &str, index: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(root ^ h ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Seeded RNG for a derived stream.
pub fn stream_rng(root: u64, label: &str, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(root, label, index))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
