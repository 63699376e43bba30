//! Learning-rate sweeps across widths on synthetic classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Activation;
use crate::optim::{AlphaSchedule, Algorithm, GammaSchedule, ScheduleSpec};

use super::problems::{gen_synthetic, ProblemKind, ProblemSpec, SyntheticSpec};
use super::train::{train_on, ModelConfig, OptimizerConfig, Preset, TrainConfig};

fn default_activation() -> Activation {
    Activation::Relu
}

fn default_batch() -> usize {
    32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub widths: Vec<usize>,
    /// Largest step size; the grid halves from here.
    pub gamma_max: f64,
    pub gamma_points: usize,
    pub problem: SyntheticSpec,
    pub epochs: usize,
    /// Hidden layers of `width` units each.
    pub hidden_layers: usize,
    pub algo: Algorithm,
    pub alpha: f64,
    pub preset: Preset,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        if self.widths.is_empty() || self.widths.contains(&0) {
            return Err(Error::InvalidDims("widths must be nonempty and positive".into()));
        }
        if self.gamma_points == 0 || self.epochs == 0 || self.hidden_layers == 0 || self.batch_size == 0 {
            return Err(Error::InvalidDims(
                "gamma_points, epochs, hidden_layers and batch_size must be positive".into(),
            ));
        }
        if !(self.gamma_max > 0.0 && self.gamma_max <= 1.0) {
            return Err(Error::OutOfRange {
                name: "gamma_max",
                value: self.gamma_max,
                range: "(0, 1]",
            });
        }
        Ok(())
    }

    /// `gamma_max / 2^i` for `i = 0..gamma_points`, largest first.
    pub fn grid(&self) -> Vec<f64> {
        (0..self.gamma_points)
            .map(|i| self.gamma_max / 2f64.powi(i as i32))
            .collect()
    }

    pub fn steps(&self) -> usize {
        (self.epochs * self.problem.train_size / self.batch_size).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub width: usize,
    pub gamma: f64,
    pub final_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepBest {
    pub width: usize,
    pub gamma: f64,
    /// Position in the grid, 0 being the largest step.
    pub index: usize,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub best: Vec<SweepBest>,
}

impl SweepReport {
    /// Largest difference in `log2 γ*` between any two widths.
    pub fn max_log2_gap(&self) -> f64 {
        let l: Vec<f64> = self.best.iter().map(|b| b.gamma.log2()).collect();
        let hi = l.iter().copied().fold(f64::MIN, f64::max);
        let lo = l.iter().copied().fold(f64::MAX, f64::min);
        if l.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }
}

/// Trains every `(width, γ)` pair from the same data and seed and picks the
/// γ with the lowest final training loss per width. Non-finite losses rank
/// last; ties go to the larger γ.
pub fn lr_transfer_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let data = gen_synthetic(&cfg.problem, cfg.seed)?;
    let grid = cfg.grid();
    let mut rows = Vec::new();
    let mut best = Vec::new();
    for &w in &cfg.widths {
        let mut pick: Option<SweepBest> = None;
        for (i, &gamma) in grid.iter().enumerate() {
            let schedule = ScheduleSpec::new(
                GammaSchedule::Constant,
                gamma,
                AlphaSchedule::Constant { alpha: cfg.alpha },
                cfg.steps(),
            )?;
            let mut model = ModelConfig::new(cfg.preset, vec![w; cfg.hidden_layers]);
            model.activation = cfg.activation;
            let tc = TrainConfig {
                model,
                optimizer: OptimizerConfig::new(cfg.algo, schedule),
                problem: ProblemSpec {
                    kind: ProblemKind::SyntheticClassification(cfg.problem),
                    seed: cfg.seed,
                },
                batch_size: cfg.batch_size,
                proxy_factor: 1,
                record_reference: false,
                seed: cfg.seed,
            };
            let loss = match train_on(&tc, &data) {
                Ok(out) => out.train_loss,
                Err(Error::Numerical { .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            let loss = if loss.is_finite() { loss } else { f64::INFINITY };
            rows.push(SweepRow {
                width: w,
                gamma,
                final_loss: loss,
            });
            if pick.is_none_or(|p| loss < p.final_loss) {
                pick = Some(SweepBest {
                    width: w,
                    gamma,
                    index: i,
                    final_loss: loss,
                });
            }
        }
        best.push(pick.expect("grid is nonempty"));
    }
    Ok(SweepReport { rows, best })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SweepConfig {
        SweepConfig {
            widths: vec![8, 16],
            gamma_max: 0.4,
            gamma_points: 3,
            problem: SyntheticSpec {
                train_size: 64,
                test_size: 16,
                ..SyntheticSpec::new(6, 3, 1, 0.2)
            },
            epochs: 2,
            hidden_layers: 1,
            algo: Algorithm::Uscg,
            alpha: 1.0,
            preset: Preset::Image,
            activation: Activation::Relu,
            batch_size: 8,
            seed: 2,
        }
    }

    #[test]
    fn grid_halves() {
        assert_eq!(small().grid(), vec![0.4, 0.2, 0.1]);
    }

    #[test]
    fn best_is_grid_argmin() {
        let mut cfg = small();
        cfg.widths = vec![8];
        let rep = lr_transfer_sweep(&cfg).unwrap();
        let min = rep.rows.iter().map(|r| r.final_loss).fold(f64::INFINITY, f64::min);
        assert_eq!(rep.best[0].final_loss, min);
        assert_eq!(rep, lr_transfer_sweep(&cfg).unwrap());
    }

    #[test]
    fn single_point_grid() {
        let mut cfg = small();
        cfg.gamma_points = 1;
        let rep = lr_transfer_sweep(&cfg).unwrap();
        assert!(rep.best.iter().all(|b| b.gamma == 0.4));
        assert_eq!(rep.max_log2_gap(), 0.0);
    }
}
