//! Counter-based random streams.
//!
//! Every (base seed, replicate, mode) triple owns an independent stream, so a
//! replicate produces the same numbers no matter which thread runs it or in
//! what order. The j-th output of a stream is a pure function of the stream
//! key and j.

use rand::RngCore;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `replicate` under `base_seed`.
pub fn replicate_seed(base_seed: u64, replicate: u64) -> u64 {
    mix64(base_seed ^ mix64(replicate.wrapping_add(1).wrapping_mul(GOLDEN)))
}

#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    gamma: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        // Odd increments keep the Weyl sequence full-period; distinct
        // increments keep streams with nearby keys from being shifts of
        // each other.
        let gamma = mix64(key ^ 0x6A09_E667_F3BC_C909) | 1;
        Self { key: mix64(key), gamma, counter: 0 }
    }

    /// Stream for one Fourier mode of one replicate.
    pub fn for_stream(base_seed: u64, replicate: u64, mode: u64) -> Self {
        let rep = replicate_seed(base_seed, replicate);
        Self::new(mix64(rep ^ mode.wrapping_add(1).wrapping_mul(GOLDEN).rotate_left(17)))
    }

    /// Number of 64-bit words drawn so far.
    pub fn position(&self) -> u64 {
        self.counter
    }

    /// Output at an arbitrary counter value without advancing.
    pub fn at(&self, counter: u64) -> u64 {
        mix64(self.key.wrapping_add(counter.wrapping_mul(self.gamma)))
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        let out = self.at(self.counter);
        self.counter = self.counter.wrapping_add(1);
        out
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
