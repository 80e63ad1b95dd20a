//! Seeded random streams.
//!
//! A run owns one main stream (ChaCha12, stream 0) that the engine consumes in
//! a fixed per-step order: `u1` (event selection), `u2` (waiting time), then
//! whatever draws the executed action needs. Agent construction uses a
//! separate stream per agent id, so the population is a pure function of
//! `(seed, id)` and can be rebuilt without replaying the event loop.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::spec::NormalSpec;

#[derive(Debug, Clone)]
pub struct SimRng {
    inner: ChaCha12Rng,
}

impl SimRng {
    /// The main event-loop stream for `seed`.
    pub fn new(seed: u64) -> Self {
        SimRng {
            inner: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    /// Stream used to sample agent `id`'s parameters.
    pub fn for_agent(seed: u64, id: u64) -> Self {
        Self::on_stream(seed, id.wrapping_add(1))
    }

    /// Stream used to decide population-level assignments (bad-actor flags).
    pub fn for_population(seed: u64) -> Self {
        Self::on_stream(seed, u64::MAX)
    }

    fn on_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha12Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SimRng { inner }
    }

    /// Uniform draw on the half-open interval `(0, 1]`.
    #[inline]
    pub fn unit_open_closed(&mut self) -> f64 {
        1.0 - self.inner.random::<f64>()
    }

    /// Uniform draw on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// `mean + std * z` for a standard normal `z`. Always consumes one normal
    /// draw, including when `std == 0`.
    pub fn normal(&mut self, spec: NormalSpec) -> f64 {
        let z: f64 = self.inner.sample(StandardNormal);
        spec.mean + spec.std * z
    }

    /// Uniform index in `0..n`. `n` must be nonzero.
    pub fn index_below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub(crate) fn inner_mut(&mut self) -> &mut ChaCha12Rng {
        &mut self.inner
    }
}
