//! Test problems: a noisy quadratic with a known gradient and a Gaussian
//! mixture classification task.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Rng};
use crate::models::{Batch, Targets};

/// `f(x) = ½ xᵀ H x` with `H` diagonal, eigenvalues log-spaced from 1 down to
/// `1/conditioning`. Gradient samples carry i.i.d. Gaussian noise with
/// `E‖noise‖² = sigma²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSpec {
    pub dim: usize,
    pub sigma: f64,
    pub conditioning: f64,
}

impl QuadraticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidDims("quadratic dim must be at least 1".into()));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::OutOfRange {
                name: "sigma",
                value: self.sigma,
                range: "[0, inf)",
            });
        }
        if !(self.conditioning >= 1.0 && self.conditioning.is_finite()) {
            return Err(Error::OutOfRange {
                name: "conditioning",
                value: self.conditioning,
                range: "[1, inf)",
            });
        }
        Ok(())
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticQuadratic {
    pub spec: QuadraticSpec,
    eig: Vec<f64>,
}

impl StochasticQuadratic {
    pub fn new(spec: QuadraticSpec) -> Result<Self> {
        spec.validate()?;
        let d = spec.dim;
        let eig = (0..d)
            .map(|i| {
                if d == 1 {
                    1.0
                } else {
                    spec.conditioning.powf(-(i as f64) / (d - 1) as f64)
                }
            })
            .collect();
        Ok(Self { spec, eig })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig
    }

    /// Largest eigenvalue, the smoothness constant in the Euclidean norm.
    pub fn lipschitz(&self) -> f64 {
        1.0
    }

    pub fn value(&self, x: &Matrix) -> f64 {
        0.5 * x
            .as_slice()
            .iter()
            .zip(&self.eig)
            .map(|(v, h)| h * v * v)
            .sum::<f64>()
    }

    pub fn grad(&self, x: &Matrix) -> Matrix {
        let data = x.as_slice().iter().zip(&self.eig).map(|(v, h)| h * v).collect();
        Matrix::from_vec(self.spec.dim, 1, data).expect("finite gradient")
    }

    /// Exact gradient plus noise. Always draws exactly `dim` normals, so two
    /// runs sharing a stream see the same noise whatever they do with it.
    pub fn noisy_grad(&self, x: &Matrix, rng: &mut Rng) -> Matrix {
        let per = self.spec.sigma / (self.spec.dim as f64).sqrt();
        let mut g = self.grad(x);
        for v in g.as_mut_slice() {
            *v += per * rng.gaussian();
        }
        g
    }
}

fn default_train_size() -> usize {
    2048
}

fn default_test_size() -> usize {
    512
}

/// Gaussian mixture: each class owns `clusters` random centers; samples are
/// a center plus `noise`-scaled Gaussian jitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub dim: usize,
    pub classes: usize,
    pub clusters: usize,
    pub noise: f64,
    #[serde(default = "default_train_size")]
    pub train_size: usize,
    #[serde(default = "default_test_size")]
    pub test_size: usize,
}

impl SyntheticSpec {
    pub fn new(dim: usize, classes: usize, clusters: usize, noise: f64) -> Self {
        Self {
            dim,
            classes,
            clusters,
            noise,
            train_size: default_train_size(),
            test_size: default_test_size(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.classes < 2 || self.clusters == 0 {
            return Err(Error::InvalidDims(format!(
                "synthetic problem needs dim >= 1, classes >= 2, clusters >= 1; got {}, {}, {}",
                self.dim, self.classes, self.clusters
            )));
        }
        if self.train_size == 0 || self.test_size == 0 {
            return Err(Error::InvalidDims("train and test sizes must be positive".into()));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::OutOfRange {
                name: "noise",
                value: self.noise,
                range: "[0, inf)",
            });
        }
        Ok(())
    }
}

/// Labelled data split into train and test parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Batch,
    pub test: Batch,
    pub classes: usize,
}

impl Dataset {
    pub fn dim(&self) -> usize {
        self.train.inputs.cols()
    }
}

/// Largest per-row RMS of a sample-major input matrix.
pub fn max_row_rms(inputs: &Matrix) -> f64 {
    let d = inputs.cols().max(1) as f64;
    (0..inputs.rows())
        .map(|i| (inputs.row(i).iter().map(|v| v * v).sum::<f64>() / d).sqrt())
        .fold(0.0, f64::max)
}

/// Deterministic in `(spec, seed)`. Inputs of both splits are divided by one
/// common factor so that every row has RMS at most 1.
pub fn gen_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let mut crng = Rng::with_stream(seed, 0);
    let centers = crng.gaussian_matrix(spec.classes * spec.clusters, spec.dim);
    let draw = |n: usize, stream: u64| {
        let mut rng = Rng::with_stream(seed, stream);
        let mut x = Matrix::zeros(n, spec.dim);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let class = rng.below(spec.classes);
            let c = class * spec.clusters + rng.below(spec.clusters);
            for (v, &m) in x.row_mut(i).iter_mut().zip(centers.row(c)) {
                *v = m + spec.noise * rng.gaussian();
            }
            labels.push(class);
        }
        (x, labels)
    };
    let (mut xtr, ytr) = draw(spec.train_size, 1);
    let (mut xte, yte) = draw(spec.test_size, 2);
    let peak = max_row_rms(&xtr).max(max_row_rms(&xte));
    if peak > 0.0 {
        xtr.scale_in_place(1.0 / peak);
        xte.scale_in_place(1.0 / peak);
    }
    Ok(Dataset {
        train: Batch {
            inputs: xtr,
            targets: Targets::Classes(ytr),
        },
        test: Batch {
            inputs: xte,
            targets: Targets::Classes(yte),
        },
        classes: spec.classes,
    })
}

/// IDX image and label files. Without a test pair the last tenth of the
/// training files is held out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdxSpec {
    pub images: PathBuf,
    pub labels: PathBuf,
    #[serde(default)]
    pub test_images: Option<PathBuf>,
    #[serde(default)]
    pub test_labels: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ProblemKind {
    StochasticQuadratic(QuadraticSpec),
    SyntheticClassification(SyntheticSpec),
    IdxDataset(IdxSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    #[serde(default)]
    pub seed: u64,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ProblemKind::StochasticQuadratic(q) => q.validate(),
            ProblemKind::SyntheticClassification(s) => s.validate(),
            ProblemKind::IdxDataset(_) => Ok(()),
        }
    }

    /// Classification data for the data-backed kinds.
    pub fn dataset(&self) -> Result<Dataset> {
        match &self.kind {
            ProblemKind::SyntheticClassification(s) => gen_synthetic(s, self.seed),
            ProblemKind::IdxDataset(idx) => super::data::load_idx_spec(idx),
            ProblemKind::StochasticQuadratic(_) => Err(Error::InvalidDims(
                "the quadratic problem has no dataset".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_spectrum_and_noise_level() {
        let q = StochasticQuadratic::new(QuadraticSpec {
            dim: 8,
            sigma: 2.0,
            conditioning: 100.0,
        })
        .unwrap();
        assert_eq!(q.eigenvalues()[0], 1.0);
        assert!((q.eigenvalues()[7] - 0.01).abs() < 1e-15);
        let x = Matrix::zeros(8, 1);
        let mut rng = Rng::new(1);
        let trials = 4000;
        let mean_sq = (0..trials)
            .map(|_| q.noisy_grad(&x, &mut rng).frobenius_norm().powi(2))
            .sum::<f64>()
            / trials as f64;
        assert!((mean_sq - 4.0).abs() < 0.2, "{mean_sq}");
    }

    #[test]
    fn quadratic_gradient_matches_value() {
        let q = StochasticQuadratic::new(QuadraticSpec {
            dim: 5,
            sigma: 0.0,
            conditioning: 10.0,
        })
        .unwrap();
        let x = Rng::new(4).gaussian_matrix(5, 1);
        let g = q.grad(&x);
        let h = 1e-6;
        for i in 0..5 {
            let mut p = x.clone();
            p.as_mut_slice()[i] += h;
            let mut m = x.clone();
            m.as_mut_slice()[i] -= h;
            let fd = (q.value(&p) - q.value(&m)) / (2.0 * h);
            assert!((fd - g.as_slice()[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn quadratic_rejects_bad_spec() {
        let bad = QuadraticSpec {
            dim: 4,
            sigma: -1.0,
            conditioning: 10.0,
        };
        assert!(StochasticQuadratic::new(bad).is_err());
        assert!(StochasticQuadratic::new(QuadraticSpec { dim: 0, ..bad.with_sigma(1.0) }).is_err());
    }

    #[test]
    fn synthetic_is_deterministic_and_rms_bounded() {
        let spec = SyntheticSpec::new(32, 4, 2, 0.5);
        let a = gen_synthetic(&spec, 7).unwrap();
        let b = gen_synthetic(&spec, 7).unwrap();
        assert_eq!(a, b);
        assert!(max_row_rms(&a.train.inputs) <= 1.0 + 1e-12);
        assert!(max_row_rms(&a.test.inputs) <= 1.0 + 1e-12);
        let c = gen_synthetic(&spec, 8).unwrap();
        assert_ne!(a.train.inputs, c.train.inputs);
    }

    #[test]
    fn problem_spec_json() {
        let json = r#"{"kind": {"type": "stochastic_quadratic", "dim": 4, "sigma": 1.0, "conditioning": 10.0}, "seed": 3}"#;
        let p: ProblemSpec = serde_json::from_str(json).unwrap();
        assert!(matches!(p.kind, ProblemKind::StochasticQuadratic(q) if q.dim == 4));
        let bad = r#"{"kind": {"type": "stochastic_quadratic", "dim": 4, "sigma": 1.0, "conditioning": 10.0, "extra": 1}}"#;
        let err = serde_json::from_str::<ProblemSpec>(bad).unwrap_err().to_string();
        assert!(err.contains("extra"), "{err}");
    }
}
