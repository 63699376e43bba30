//! Seeded random streams.
//!
//! Uniform bits come from ChaCha8 (`rand_chacha`), whose output is specified
//! independently of platform and word size. Normal deviates use the Box–Muller
//! transform so that every draw is a documented function of the seed:
//!
//! ```text
//! u1 ∈ (0, 1], u2 ∈ [0, 1)
//! r = sqrt(-2 ln u1), θ = 2π u2
//! z0 = r cos θ, z1 = r sin θ   (z1 is cached for the next call)
//! ```

use std::f64::consts::TAU;

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Matrix;

/// Deterministic random source keyed by `(seed, stream)`.
#[derive(Clone, Debug)]
pub struct Rng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// Independent stream for e.g. a trial index or a layer index.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner, spare: None }
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    pub fn rademacher(&mut self) -> f64 {
        if self.inner.gen::<bool>() {
            1.0
        } else {
            -1.0
        }
    }

    pub fn gaussian_matrix(&mut self, rows: usize, cols: usize) -> Matrix {
        let data = (0..rows * cols).map(|_| self.gaussian()).collect();
        Matrix::from_vec(rows, cols, data).expect("gaussian draws are finite")
    }

    pub fn rademacher_matrix(&mut self, rows: usize, cols: usize) -> Matrix {
        let data = (0..rows * cols).map(|_| self.rademacher()).collect();
        Matrix::from_vec(rows, cols, data).expect("signs are finite")
    }

    /// Fisher–Yates permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.inner.gen_range(0..=i);
            idx.swap(i, j);
        }
        idx
    }
}

/// Child seed for sub-run `index` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    Rng::with_stream(seed, index).inner.next_u64()
}

/// Standard-normal matrix, deterministic in `seed`.
pub fn rng_gaussian(rows: usize, cols: usize, seed: u64) -> Matrix {
    Rng::new(seed).gaussian_matrix(rows, cols)
}

/// Matrix of independent ±1 entries, deterministic in `seed`.
pub fn rng_rademacher(rows: usize, cols: usize, seed: u64) -> Matrix {
    Rng::new(seed).rademacher_matrix(rows, cols)
}
