//! Seed discipline: every stochastic step draws from a generator whose seed is
//! derived from the run's root seed, a stream tag and a counter. Nothing reads
//! global RNG state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    FirstView = 2,
    SecondView = 3,
    GlobalAnchors = 4,
    NodeSplit = 5,
    EdgeSplit = 6,
    Negatives = 7,
    Probe = 8,
    Fixture = 9,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the seed for draw `index` of `stream` under `root`.
pub fn derive_seed(root: u64, stream: Stream, index: u64) -> u64 {
    let a = splitmix64(root);
    let b = splitmix64(a ^ (stream as u64).wrapping_mul(0xd1b5_4a32_d192_ed03));
    splitmix64(b ^ index.wrapping_mul(0x8cb9_2ba7_2f3d_8dd7))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_rng(root: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    rng_from_seed(derive_seed(root, stream, index))
}
