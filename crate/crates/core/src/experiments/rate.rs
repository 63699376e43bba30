//! Convergence-rate harnesses on the stochastic quadratic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{derive_seed, Matrix, Rng};
use crate::norms::{composite_lmo, LayerNorms, ModelNormSpec, NormKind, NormSpec};
use crate::optim::{theory_gamma, theory_gamma_interval, AlphaSchedule, Algorithm, GammaSchedule, ScheduleSpec};

use super::diagnostics::RunDiagnostics;
use super::problems::{QuadraticSpec, StochasticQuadratic};
use super::stats::{log_log_slope, mean, std_err};
use super::train::{run_optimizer, OptimizerConfig, QuadraticObjective};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlphaMode {
    ConstantAlpha { alpha: f64 },
    VanishingAlpha,
}

impl AlphaMode {
    fn schedule(self) -> AlphaSchedule {
        match self {
            AlphaMode::ConstantAlpha { alpha } => AlphaSchedule::Constant { alpha },
            AlphaMode::VanishingAlpha => AlphaSchedule::Vanishing,
        }
    }
}

fn default_norm() -> NormKind {
    NormKind::EuclideanVec
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    pub algo: Algorithm,
    pub mode: AlphaMode,
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub problem: QuadraticSpec,
    /// Vector norm of the constraint ball.
    #[serde(default = "default_norm")]
    pub norm: NormKind,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default)]
    pub seed: u64,
}

impl RateConfig {
    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        if !self.norm.is_vector() {
            return Err(Error::InvalidDims(format!("{} is not a vector norm", self.norm.name())));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::OutOfRange {
                name: "radius",
                value: self.radius,
                range: "(0, inf)",
            });
        }
        if self.trials == 0 || self.n_list.is_empty() || self.n_list.contains(&0) {
            return Err(Error::InvalidDims("need trials >= 1 and a nonempty n_list of positive horizons".into()));
        }
        if let AlphaMode::ConstantAlpha { alpha } = self.mode {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::OutOfRange {
                    name: "alpha",
                    value: alpha,
                    range: "(0, 1]",
                });
            }
        }
        Ok(())
    }

    fn norm_spec(&self) -> Result<ModelNormSpec> {
        let w = NormSpec::vector(self.norm, 1.0, self.problem.dim)?;
        ModelNormSpec::new(vec![LayerNorms::weight_only(w, self.radius)?])
    }

    /// Step size for horizon `n`: the vanishing-α choice `0.75 n^{-3/4}`, or
    /// `1/√n` with constant α.
    pub fn gamma_for(&self, n: usize) -> Result<f64> {
        match self.mode {
            AlphaMode::VanishingAlpha => {
                let g = theory_gamma(n);
                let (lo, hi) = theory_gamma_interval(n);
                if !(lo < g && g < hi) {
                    return Err(Error::OutOfRange {
                        name: "gamma",
                        value: g,
                        range: "(1/(2 n^0.75), 1/n^0.75)",
                    });
                }
                Ok(g)
            }
            AlphaMode::ConstantAlpha { .. } => Ok(1.0 / (n as f64).sqrt()),
        }
    }

    /// `fw_gap` for SCG, the dual gradient norm otherwise.
    pub fn metric_name(&self) -> &'static str {
        if self.algo == Algorithm::Scg {
            "fw_gap"
        } else {
            "dual_grad_norm"
        }
    }
}

/// Start on the boundary of the constraint ball, shared by every run of a
/// harness.
pub fn boundary_start(spec: &ModelNormSpec, dim: usize, seed: u64) -> Result<Vec<Matrix>> {
    let dir = Rng::with_stream(seed, u64::MAX).gaussian_matrix(dim, 1);
    Ok(composite_lmo(&[dir], spec)?.into_iter().map(|m| m.scale(-1.0)).collect())
}

/// One run on the quadratic with exact reference gradients.
pub fn quadratic_run(
    cfg: &RateConfig,
    sigma: f64,
    n: usize,
    gamma: f64,
    trial: usize,
) -> Result<RunDiagnostics> {
    let spec = cfg.norm_spec()?;
    let problem = StochasticQuadratic::new(cfg.problem.with_sigma(sigma))?;
    let mut obj = QuadraticObjective {
        problem,
        spec: spec.clone(),
    };
    let mut x = boundary_start(&spec, cfg.problem.dim, cfg.seed)?;
    let schedule = ScheduleSpec::new(GammaSchedule::Constant, gamma, cfg.mode.schedule(), n)?;
    let opt = OptimizerConfig::new(cfg.algo, schedule);
    let mut rng = Rng::with_stream(derive_seed(cfg.seed, n as u64), trial as u64);
    run_optimizer(&mut obj, &mut x, &opt, &mut rng, true)
}

fn metric_of(cfg: &RateConfig, d: &RunDiagnostics) -> Vec<f64> {
    d.records
        .iter()
        .map(|r| if cfg.algo == Algorithm::Scg { r.fw_gap } else { r.dual_grad_norm })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePoint {
    pub n: usize,
    pub gamma: f64,
    pub sigma: f64,
    /// Trial mean of the per-run statistic: the average over all iterates
    /// (vanishing α) or over the last half (constant α).
    pub metric: f64,
    pub std_err: f64,
    /// Trial mean of `metric(x^n) / metric(x^1)`.
    pub final_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plateau {
    pub n: usize,
    pub sigma: f64,
    pub at_sigma: f64,
    pub at_double_sigma: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub algo: Algorithm,
    pub mode: AlphaMode,
    pub metric: &'static str,
    /// Smoothness constant of the quadratic in the Euclidean norm.
    pub lipschitz: f64,
    pub sigma: f64,
    pub radius: f64,
    pub points: Vec<RatePoint>,
    /// Log-log slope of `metric` against `n` (vanishing α only).
    pub slope: Option<f64>,
    /// Floor at the largest `n` for `σ` and `2σ` (constant α only).
    pub plateau: Option<Plateau>,
}

fn point(cfg: &RateConfig, sigma: f64, n: usize) -> Result<RatePoint> {
    let gamma = cfg.gamma_for(n)?;
    let mut stats = Vec::with_capacity(cfg.trials);
    let mut ratios = Vec::with_capacity(cfg.trials);
    for t in 0..cfg.trials {
        let d = quadratic_run(cfg, sigma, n, gamma, t)?;
        let m = metric_of(cfg, &d);
        let tail = match cfg.mode {
            AlphaMode::VanishingAlpha => &m[..],
            AlphaMode::ConstantAlpha { .. } => &m[n / 2..],
        };
        stats.push(mean(tail));
        ratios.push(m[n - 1] / m[0]);
    }
    Ok(RatePoint {
        n,
        gamma,
        sigma,
        metric: mean(&stats),
        std_err: std_err(&stats),
        final_ratio: mean(&ratios),
    })
}

pub fn rate_harness(cfg: &RateConfig) -> Result<RateReport> {
    cfg.validate()?;
    let sigma = cfg.problem.sigma;
    let mut points = Vec::new();
    for &n in &cfg.n_list {
        points.push(point(cfg, sigma, n)?);
    }
    let (slope, plateau) = match cfg.mode {
        AlphaMode::VanishingAlpha => {
            let slope = if points.len() >= 2 {
                let ns: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
                let ms: Vec<f64> = points.iter().map(|p| p.metric).collect();
                Some(log_log_slope(&ns, &ms)?)
            } else {
                None
            };
            (slope, None)
        }
        AlphaMode::ConstantAlpha { .. } => {
            let n = *cfg.n_list.iter().max().expect("validated nonempty");
            let low = points.iter().find(|p| p.n == n).expect("largest n was run").metric;
            let high_point = point(cfg, 2.0 * sigma, n)?;
            let high = high_point.metric;
            points.push(high_point);
            (
                None,
                Some(Plateau {
                    n,
                    sigma,
                    at_sigma: low,
                    at_double_sigma: high,
                    ratio: high / low,
                }),
            )
        }
    };
    Ok(RateReport {
        algo: cfg.algo,
        mode: cfg.mode,
        metric: cfg.metric_name(),
        lipschitz: 1.0,
        sigma,
        radius: cfg.radius,
        points,
        slope,
        plateau,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorProbeConfig {
    pub problem: QuadraticSpec,
    pub horizon: usize,
    pub trials: usize,
    #[serde(default = "vanishing")]
    pub mode: AlphaMode,
    /// Defaults to `0.75 horizon^{-3/4}`.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "default_norm")]
    pub norm: NormKind,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default)]
    pub seed: u64,
}

fn vanishing() -> AlphaMode {
    AlphaMode::VanishingAlpha
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorProbeReport {
    /// Trial mean of `‖d^k - ∇f(x^k)‖₂²`, indexed by `k - 1`.
    pub mean_sq_error: Vec<f64>,
    /// Dyadic bins `[2^j, 2^{j+1})`: geometric center and mean value.
    pub bins: Vec<(f64, f64)>,
    /// Log-log slope over the bins.
    pub slope: f64,
    pub overall_mean: f64,
}

pub fn error_decay_probe(cfg: &ErrorProbeConfig) -> Result<ErrorProbeReport> {
    let rate = RateConfig {
        algo: Algorithm::Uscg,
        mode: cfg.mode,
        n_list: vec![cfg.horizon],
        trials: cfg.trials,
        problem: cfg.problem,
        norm: cfg.norm,
        radius: cfg.radius,
        seed: cfg.seed,
    };
    rate.validate()?;
    let gamma = match cfg.gamma {
        Some(g) => g,
        None => theory_gamma(cfg.horizon),
    };
    let n = cfg.horizon;
    let mut acc = vec![0.0; n];
    for t in 0..cfg.trials {
        let d = quadratic_run(&rate, cfg.problem.sigma, n, gamma, t)?;
        for (a, r) in acc.iter_mut().zip(&d.records) {
            *a += r.error_proxy * r.error_proxy;
        }
    }
    let mean_sq_error: Vec<f64> = acc.into_iter().map(|a| a / cfg.trials as f64).collect();
    let mut bins = Vec::new();
    let mut lo = 1usize;
    while lo <= n {
        let hi = (2 * lo - 1).min(n);
        let center = ((lo as f64) * (hi as f64)).sqrt();
        bins.push((center, mean(&mean_sq_error[lo - 1..hi])));
        lo *= 2;
    }
    let slope = if bins.len() >= 2 && bins.iter().all(|b| b.1 > 0.0) {
        let (xs, ys): (Vec<f64>, Vec<f64>) = bins.iter().copied().unzip();
        log_log_slope(&xs, &ys)?
    } else {
        f64::NAN
    };
    Ok(ErrorProbeReport {
        overall_mean: mean(&mean_sq_error),
        mean_sq_error,
        bins,
        slope,
    })
}
