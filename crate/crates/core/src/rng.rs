//! Seeded, stream-splittable random number generation.
//!
//! `RngState` wraps a ChaCha8 generator. ChaCha is counter based: the 64-bit
//! seed picks the key and the stream index picks an independent keystream,
//! so replicate `i` of an experiment always reads stream `i` no matter which
//! worker runs it. Output is identical on every platform.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator state for one stream. Single owner; never shared across threads.
#[derive(Debug, Clone)]
pub struct RngState {
    inner: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl RngState {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner, seed, stream }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A fresh state on another stream of the same seed.
    pub fn split(&self, stream: u64) -> Self {
        Self::new(self.seed, stream)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on the open interval (0, 1), with 53 bits of resolution.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Bernoulli(p) draw consuming exactly one 64-bit word.
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform_open() < p
    }

    pub(crate) fn inner_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.inner
    }
}
