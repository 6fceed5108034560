//! Seeded randomness.
//!
//! Every stream is a ChaCha20 generator keyed by the 64-bit run seed. Sub-streams
//! keep the key and select a distinct ChaCha stream id derived from
//! `(index, stage)`, so two sub-streams never overlap and can be handed to
//! independent workers.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Well-known stage identifiers used by the pipeline.
pub mod stage {
    pub const GENERATE: u64 = 1;
    pub const SPLIT: u64 = 2;
    pub const FIT: u64 = 3;
    pub const RANDOM_RANKING: u64 = 4;
    pub const PERTURB: u64 = 5;
}

#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    stream: u64,
    inner: ChaCha20Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream for `(index, stage)`; a pure function of the seed and
    /// the pair, unaffected by how much of the parent stream was consumed.
    pub fn substream(&self, index: u64, stage: u64) -> Rng {
        let id = splitmix64(splitmix64(index).wrapping_add(stage)).max(1);
        Self::with_stream(self.seed, id)
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngCore for Rng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
