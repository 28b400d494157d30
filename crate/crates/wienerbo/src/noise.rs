//! Reproducible measurement noise.
//!
//! Each draw is addressed by `(seed, step)`: the seed picks a ChaCha8 key
//! and the step picks the stream, so a draw never depends on how many
//! values were consumed before it or on which thread asks for it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::GNoise;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSource {
    seed: u64,
    sigma: f64,
    g_noise: GNoise,
}

impl NoiseSource {
    pub fn new(seed: u64, sigma: f64, g_noise: GNoise) -> Self {
        Self {
            seed,
            sigma,
            g_noise,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Standard normal pair for `step`.
    pub fn standard_pair(&self, step: usize) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(step as u64);
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        (a, b)
    }

    /// Additive noise `(m_f, m_g)` for `step`.
    ///
    /// With shared noise `m_g = −m_f`, which makes `y_g = −y_f + f_min`.
    pub fn draw(&self, step: usize) -> (f64, f64) {
        let (a, b) = self.standard_pair(step);
        let m_f = self.sigma * a;
        match self.g_noise {
            GNoise::Shared => (m_f, -m_f),
            GNoise::Independent => (m_f, self.sigma * b),
        }
    }
}
