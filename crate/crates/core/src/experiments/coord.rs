//! Coordinate check: how much each layer's preactivations move after one
//! spectral-oracle step, as a function of width.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{derive_seed, Matrix, Rng};
use crate::models::{same_norm_config, Activation, Batch, InputKind, Loss, MlpModel, Targets};
use crate::norms::NormKind;
use crate::optim::{uscg_step, Algorithm, OptimizerState};

fn default_input_dim() -> usize {
    32
}

fn default_activation() -> Activation {
    Activation::Relu
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordCheckConfig {
    pub widths: Vec<usize>,
    /// Number of layers; every layer has `width` outputs.
    pub depth: usize,
    pub gamma: f64,
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Fixed input size; inputs are random ±1 vectors.
    #[serde(default = "default_input_dim")]
    pub input_dim: usize,
    #[serde(default = "default_activation")]
    pub activation: Activation,
}

impl CoordCheckConfig {
    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 2 {
            return Err(Error::InvalidDims("coordinate check needs at least two widths".into()));
        }
        if self.depth == 0 || self.samples == 0 || self.input_dim == 0 {
            return Err(Error::InvalidDims("depth, samples and input_dim must be positive".into()));
        }
        if let Some(&w) = self.widths.iter().find(|&&w| w < self.input_dim) {
            return Err(Error::InvalidDims(format!(
                "width {w} is below the input size {}",
                self.input_dim
            )));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::OutOfRange {
                name: "gamma",
                value: self.gamma,
                range: "[0, inf)",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoordRow {
    pub width: usize,
    /// 1-based layer index.
    pub layer: usize,
    /// RMS of the preactivation change over coordinates and samples.
    pub rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordReport {
    pub gamma: f64,
    pub rows: Vec<CoordRow>,
}

impl CoordReport {
    /// Largest over layers of `max / min` RMS across widths.
    pub fn max_width_ratio(&self) -> f64 {
        let depth = self.rows.iter().map(|r| r.layer).max().unwrap_or(0);
        (1..=depth)
            .map(|l| {
                let v: Vec<f64> = self.rows.iter().filter(|r| r.layer == l).map(|r| r.rms).collect();
                let hi = v.iter().copied().fold(f64::MIN, f64::max);
                let lo = v.iter().copied().fold(f64::MAX, f64::min);
                hi / lo
            })
            .fold(1.0, f64::max)
    }

    /// Whether every RMS lies in `[gamma/3, 3 gamma]`.
    pub fn within_band(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.rms >= self.gamma / 3.0 && r.rms <= 3.0 * self.gamma)
    }
}

/// Sum of squared preactivation changes per layer for one model draw.
fn one_sample(cfg: &CoordCheckConfig, width: usize, sample: usize) -> Result<Vec<f64>> {
    let mut dims = vec![cfg.input_dim];
    dims.extend(std::iter::repeat_n(width, cfg.depth));
    let specs = same_norm_config(NormKind::Spectral, InputKind::Image, &dims, cfg.activation, false)?;
    let seed = derive_seed(cfg.seed, sample as u64);
    let model = MlpModel::init(&specs, seed)?;
    let mut rng = Rng::with_stream(seed, u64::MAX);
    let z = rng.rademacher_matrix(1, cfg.input_dim);
    let y = rng.gaussian_matrix(1, width);
    let batch = Batch {
        inputs: z.clone(),
        targets: Targets::Values(y),
    };
    let before = model.forward_batch(&z)?;
    let (_, grads) = model.loss_and_grad(&batch, Loss::Mse)?;
    let spec = model.norm_spec()?;
    let mut state = OptimizerState::new(Algorithm::Uscg, &spec);
    let mut x = model.params();
    uscg_step(&mut x, &mut state, &grads, cfg.gamma, 1.0, &spec)?;
    let mut moved = model.clone();
    moved.set_params(&x)?;
    let after = moved.forward_batch(&z)?;
    Ok(before
        .pre
        .iter()
        .zip(&after.pre)
        .map(|(a, b): (&Matrix, &Matrix)| {
            let d = b.sub(a);
            d.dot(&d)
        })
        .collect())
}

/// One uSCG step with `α = 1` on one sample per seed, for every width.
pub fn coordinate_check(cfg: &CoordCheckConfig) -> Result<CoordReport> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.widths.len() * cfg.depth);
    for &w in &cfg.widths {
        let mut sq = vec![0.0; cfg.depth];
        for s in 0..cfg.samples {
            for (acc, v) in sq.iter_mut().zip(one_sample(cfg, w, s)?) {
                *acc += v;
            }
        }
        let count = (cfg.samples * w) as f64;
        for (l, v) in sq.into_iter().enumerate() {
            rows.push(CoordRow {
                width: w,
                layer: l + 1,
                rms: (v / count).sqrt(),
            });
        }
    }
    Ok(CoordReport {
        gamma: cfg.gamma,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(gamma: f64) -> CoordCheckConfig {
        CoordCheckConfig {
            widths: vec![16, 32],
            depth: 2,
            gamma,
            samples: 3,
            seed: 0,
            input_dim: 8,
            activation: Activation::Relu,
        }
    }

    #[test]
    fn zero_gamma_moves_nothing() {
        let rep = coordinate_check(&small(0.0)).unwrap();
        assert_eq!(rep.rows.len(), 4);
        assert!(rep.rows.iter().all(|r| r.rms == 0.0));
    }

    #[test]
    fn first_layer_change_is_gamma_times_input_rms() {
        // The first update is rank one along the input, so every sample moves
        // the first layer by exactly γ in RMS for ±1 inputs.
        let rep = coordinate_check(&small(0.01)).unwrap();
        for r in rep.rows.iter().filter(|r| r.layer == 1) {
            assert!((r.rms - 0.01).abs() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn rejects_single_width() {
        let mut cfg = small(0.01);
        cfg.widths = vec![16];
        assert!(coordinate_check(&cfg).is_err());
    }
}
