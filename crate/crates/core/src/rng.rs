//! Counter-addressed random streams.
//!
//! Every random quantity is a pure function of the master seed and a
//! [`StreamKey`]: a ChaCha8 key is derived from `(seed, level, run, repetition)`,
//! the ChaCha stream id selects the purpose, and the block counter addresses the
//! node index and coordinate. Results do not depend on scheduling.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Identifies one independent estimate inside an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct StreamKey {
    pub level: u64,
    pub run: u64,
    pub repetition: u64,
}

impl StreamKey {
    pub fn new(level: u64, run: u64, repetition: u64) -> Self {
        Self { level, run, repetition }
    }

    pub fn with_repetition(self, repetition: u64) -> Self {
        Self { repetition, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub(crate) enum Purpose {
    Draw = 1,
    Jitter = 2,
    Uniform = 3,
}

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Source of randomness for one estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    key: StreamKey,
}

impl RngStream {
    pub fn new(seed: u64, key: StreamKey) -> Self {
        Self { seed, key }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }

    /// Stream for another repetition under the same seed, level and run.
    pub fn repetition(&self, repetition: u64) -> Self {
        Self::new(self.seed, self.key.with_repetition(repetition))
    }

    fn chacha_seed(&self) -> [u8; 32] {
        let mut words = [0u64; 4];
        let mut h = splitmix64(self.seed);
        for (i, part) in [self.key.level, self.key.run, self.key.repetition, 0x6861_7368]
            .into_iter()
            .enumerate()
        {
            h = splitmix64(h ^ part.wrapping_mul(0xd605_bbb5_8c8a_bbcd));
            words[i] = h;
        }
        let mut out = [0u8; 32];
        for (chunk, w) in out.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub(crate) fn generator(&self, purpose: Purpose) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.chacha_seed());
        rng.set_stream(purpose as u64);
        rng
    }

    /// Sequential generator for lattice draws (shift, then anchor).
    pub fn draws(&self) -> DrawSource {
        DrawSource(self.generator(Purpose::Draw))
    }

    /// Jitter addressed by `(node index, coordinate)`.
    pub fn jitter(&self, dim: usize) -> JitterSource {
        JitterSource {
            rng: self.generator(Purpose::Jitter),
            dim,
        }
    }

    /// Sequential uniform points for baselines.
    pub fn uniforms(&self) -> UniformSource {
        UniformSource(self.generator(Purpose::Uniform))
    }
}

#[inline]
pub(crate) fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub struct DrawSource(ChaCha8Rng);

impl DrawSource {
    /// Uniform integer in `[lo, hi)` by rejection sampling (no modulo bias).
    pub fn uniform_int(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo < hi, "empty range");
        lo + self.0.random_range(0..hi - lo)
    }
}

pub struct JitterSource {
    rng: ChaCha8Rng,
    dim: usize,
}

impl JitterSource {
    /// Positions the source at node `index`; the next `dim` draws are its offsets.
    pub fn seek_node(&mut self, index: u64) {
        // two 32-bit words per u64 draw
        self.rng.set_word_pos(2 * index as u128 * self.dim as u128);
    }

    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        unit_f64(self.rng.next_u64())
    }
}

pub struct UniformSource(ChaCha8Rng);

impl UniformSource {
    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        unit_f64(self.0.next_u64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_is_identical() {
        let s = RngStream::new(42, StreamKey::new(3, 4, 5));
        let mut a = s.draws();
        let mut b = s.draws();
        for _ in 0..100 {
            assert_eq!(a.uniform_int(1, 1000), b.uniform_int(1, 1000));
        }
    }

    #[test]
    fn keys_and_purposes_separate() {
        let s = RngStream::new(42, StreamKey::new(0, 0, 0));
        let t = s.repetition(1);
        let mut a = s.uniforms();
        let mut b = t.uniforms();
        let mut c = s.jitter(1);
        let x: Vec<f64> = (0..8).map(|_| a.next_unit()).collect();
        let y: Vec<f64> = (0..8).map(|_| b.next_unit()).collect();
        let z: Vec<f64> = (0..8).map(|_| c.next_unit()).collect();
        assert_ne!(x, y);
        assert_ne!(x, z);
    }

    #[test]
    fn jitter_seek_matches_sequential() {
        let s = RngStream::new(9, StreamKey::default());
        let dim = 3;
        let mut seq = s.jitter(dim);
        let all: Vec<f64> = (0..5 * dim).map(|_| seq.next_unit()).collect();
        let mut jumpy = s.jitter(dim);
        for node in [4u64, 0, 2] {
            jumpy.seek_node(node);
            for i in 0..dim {
                assert_eq!(jumpy.next_unit(), all[node as usize * dim + i]);
            }
        }
    }

    #[test]
    fn units_in_range() {
        assert_eq!(unit_f64(0), 0.0);
        assert!(unit_f64(u64::MAX) < 1.0);
    }
}
