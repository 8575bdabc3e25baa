//! Master seed and named independent substreams.
//!
//! Every random draw in a run comes from a substream keyed by
//! `(purpose, node, repetition)`. The derivation is a fixed SplitMix64-style
//! mix (not the standard library hasher, whose output may change between
//! releases), so a scenario seed pins every stream: traffic realizations do
//! not move when an unrelated consumer (for example a different MAC scheme)
//! draws more or fewer values.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// What a substream feeds; part of the stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    /// Packet arrival processes and fixed-profile phase offsets.
    Traffic,
    /// BMAC contention backoff delays.
    Backoff,
}

impl StreamPurpose {
    fn tag(self) -> u64 {
        match self {
            StreamPurpose::Traffic => 0x7452_4146,
            StreamPurpose::Backoff => 0x4241_434b,
        }
    }
}

/// 64-bit master seed for one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeed(pub u64);

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RunSeed {
    /// Deterministic generator for `(purpose, node, rep)`.
    pub fn substream(self, purpose: StreamPurpose, node: u32, rep: u32) -> ChaCha12Rng {
        let mut state = self.0;
        let _ = splitmix64(&mut state);
        state ^= purpose.tag();
        let _ = splitmix64(&mut state);
        state ^= (node as u64) << 32 | rep as u64;
        let derived = splitmix64(&mut state);
        ChaCha12Rng::seed_from_u64(derived)
    }
}
