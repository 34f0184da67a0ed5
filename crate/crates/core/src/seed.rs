//! Seed derivation for independent random streams.
//!
//! Every stream is identified by a path of indices below a master seed, e.g.
//! `(seed, variant, class, tree)`. Each step mixes the parent seed and the
//! child index through the SplitMix64 finalizer, so a stream depends only on
//! its path and never on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of child stream `index` under `parent`.
pub fn derive(parent: u64, index: u64) -> u64 {
    mix64(parent ^ mix64(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Seed of model variant `index` (0-based) trained under `master`.
///
/// The train/test split consumes `master` itself; models draw from this
/// separate branch.
pub fn variant(master: u64, index: u64) -> u64 {
    derive(derive(master, 1), index)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
