//! Deterministic Gaussian streams for reproducible Monte Carlo.
//!
//! Every consumer draws from a `NormalStream` keyed by `(seed, stream)`.
//! Stream `i` is ChaCha12 on its own stream index, so replicate `i` always
//! sees the same numbers no matter which worker thread runs it or in what
//! order replicates are scheduled. Normals come from 53-bit uniforms through
//! the inverse CDF, which keeps the uniform-to-normal coupling monotone.

use crate::special::norm_quantile;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

pub struct NormalStream {
    rng: ChaCha12Rng,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        NormalStream { rng }
    }

    /// Uniform in the open interval (0,1) from the top 53 bits.
    pub fn next_uniform(&mut self) -> f64 {
        let bits = self.rng.next_u64() >> 11;
        (bits as f64 + 0.5) * (1.0 / 9007199254740992.0)
    }

    pub fn next_normal(&mut self) -> f64 {
        norm_quantile(self.next_uniform())
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for slot in out.iter_mut() {
            *slot = self.next_normal();
        }
    }
}
