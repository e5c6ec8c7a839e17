//! Deterministic sub-seeds.
//!
//! Every random consumer draws from its own ChaCha8 stream seeded with
//! `derive(master, stream, index)`, so adding shots or attempts in one stage
//! never shifts another. `index` counts repeated uses within a stream (prep
//! attempt number, distribution draw, ...).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stream {
    Prep = 1,
    Sampling = 2,
    Synthetic = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive(master: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(stream as u64)).wrapping_add(index))
}

pub fn rng(master: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, stream, index))
}
