//! Reproducible per-path random streams.
//!
//! Each path draws from ChaCha8 keyed by the master seed, with the path's
//! `stream_id` selecting an independent 64-bit stream. ChaCha is a
//! counter-based cipher, so a path's numbers depend only on
//! `(seed, stream_id)` and never on scheduling order. Normals come from
//! `rand_distr`'s ziggurat sampler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Default master seed used by the CLI when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_120_611;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NoiseStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl NoiseStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// A sibling stream, e.g. for the independent noise of the planar system.
    /// Substreams are separated in the high bits of the stream id.
    pub fn substream(&self, lane: u64) -> Self {
        Self { seed: self.seed, stream_id: self.stream_id ^ (lane << 48) }
    }

    pub fn rng(&self) -> PathRng {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(self.stream_id);
        PathRng { inner }
    }
}

pub struct PathRng {
    inner: ChaCha8Rng,
}

impl PathRng {
    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform on `(0, 1]`, safe to pass to `ln`.
    #[inline]
    pub fn open_uniform(&mut self) -> f64 {
        1.0 - self.inner.random::<f64>()
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.inner.random::<f64>() < p
    }
}
