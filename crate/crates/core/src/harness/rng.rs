//! Counter-based random streams.
//!
//! Every stream is a ChaCha8 keystream whose 256-bit key encodes
//! `(seed, level, purpose, sub)` and whose 64-bit stream id is the sample index.
//! A sample therefore sees the same draws whatever order or thread it runs on,
//! and fine/coarse coupling, idiosyncratic particle noise and mode-decay draws
//! never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u32)]
pub enum Purpose {
    Brownian = 1,
    Idiosyncratic = 2,
    ModeDecay = 3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub level: u32,
    pub purpose: Purpose,
    pub index: u64,
    pub sub: u32,
}

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        StreamKey {
            seed,
            level: 0,
            purpose: Purpose::Brownian,
            index: 0,
            sub: 0,
        }
    }

    pub fn level(mut self, level: u32) -> Self {
        self.level = level;
        self
    }

    pub fn purpose(mut self, purpose: Purpose) -> Self {
        self.purpose = purpose;
        self
    }

    pub fn index(mut self, index: u64) -> Self {
        self.index = index;
        self
    }

    pub fn sub(mut self, sub: u32) -> Self {
        self.sub = sub;
        self
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..12].copy_from_slice(&self.level.to_le_bytes());
        key[12..16].copy_from_slice(&(self.purpose as u32).to_le_bytes());
        key[16..20].copy_from_slice(&self.sub.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.index);
        rng
    }
}
