//! Seedable, platform-independent random streams.
//!
//! The generator is ChaCha8 (`rand_chacha`). Uniforms take the top 53 bits
//! of one `u64`. Gaussians use Box-Muller on a pair of uniforms `(u1, u2)`
//! drawn in that order, emitting `r·cos(2πu2)` then `r·sin(2πu2)` where
//! `r = sqrt(-2 ln(1 - u1))`. All arithmetic is done in `f64` and rounded to
//! the target type at the end, so `f32` and `f64` runs see the same draws.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::numerics::Real;

#[derive(Clone, Debug)]
pub struct Rng {
    inner: ChaCha8Rng,
}

impl Rng {
    pub const ALGORITHM: &'static str = "chacha8";

    pub fn new(seed: u64) -> Self {
        Self { inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Independent stream `stream` of generator `seed`.
    pub fn derive(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `[0, n)` by rejection (no modulo bias).
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.inner.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Standard normal pair by Box-Muller.
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        (r * theta.cos(), r * theta.sin())
    }

    pub fn normal(&mut self) -> f64 {
        self.normal_pair().0
    }

    pub fn fill_normal<T: Real>(&mut self, out: &mut [T]) {
        let mut chunks = out.chunks_exact_mut(2);
        for pair in &mut chunks {
            let (a, b) = self.normal_pair();
            pair[0] = T::lit(a);
            pair[1] = T::lit(b);
        }
        if let [last] = chunks.into_remainder() {
            *last = T::lit(self.normal_pair().0);
        }
    }

    pub fn normal_vec<T: Real>(&mut self, n: usize) -> Vec<T> {
        let mut v = vec![T::zero(); n];
        self.fill_normal(&mut v);
        v
    }
}
