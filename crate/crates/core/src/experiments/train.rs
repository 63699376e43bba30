//! The optimization loop shared by training runs and the rate harnesses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{derive_seed, Matrix, Rng};
use crate::models::{
    build_config, same_norm_config, Activation, Batch, Domain, InitScheme, InputKind, LayerSpec,
    Loss, MlpModel, Targets,
};
use crate::norms::{
    composite_dual_norm, composite_norm, fw_gap, ModelNormSpec, NormKind, SpectralBackend,
};
use crate::optim::{Algorithm, OptimizerState, ScheduleSpec};

use super::diagnostics::{Reference, RunDiagnostics, StepRecord, FEASIBLE_TOL};
use super::problems::{Dataset, ProblemKind, ProblemSpec, StochasticQuadratic};

/// A stochastic objective over a flat parameter list.
pub trait Objective {
    fn norm_spec(&self) -> &ModelNormSpec;

    /// Loss and gradient on a fresh sample drawn from `rng`.
    fn sample(&mut self, x: &[Matrix], rng: &mut Rng) -> Result<(f64, Vec<Matrix>)>;

    /// Best available estimate of the full gradient. Must not touch the
    /// training stream.
    fn reference(&mut self, x: &[Matrix]) -> Result<Vec<Matrix>>;

    fn reference_kind(&self) -> Reference;
}

/// Quadratic over a single `dim x 1` parameter.
pub struct QuadraticObjective {
    pub problem: StochasticQuadratic,
    pub spec: ModelNormSpec,
}

impl Objective for QuadraticObjective {
    fn norm_spec(&self) -> &ModelNormSpec {
        &self.spec
    }

    fn sample(&mut self, x: &[Matrix], rng: &mut Rng) -> Result<(f64, Vec<Matrix>)> {
        let p = single(x)?;
        Ok((self.problem.value(p), vec![self.problem.noisy_grad(p, rng)]))
    }

    fn reference(&mut self, x: &[Matrix]) -> Result<Vec<Matrix>> {
        Ok(vec![self.problem.grad(single(x)?)])
    }

    fn reference_kind(&self) -> Reference {
        Reference::Exact
    }
}

fn single(x: &[Matrix]) -> Result<&Matrix> {
    match x {
        [p] => Ok(p),
        _ => Err(Error::Misaligned {
            expected: 1,
            found: x.len(),
        }),
    }
}

/// Minibatch loss of an MLP on a fixed training set, sampled with replacement.
pub struct MlpObjective {
    pub model: MlpModel,
    pub data: Batch,
    pub loss: Loss,
    pub batch_size: usize,
    pub proxy_factor: usize,
    spec: ModelNormSpec,
    proxy_rng: Rng,
}

impl MlpObjective {
    pub fn new(
        model: MlpModel,
        data: Batch,
        loss: Loss,
        batch_size: usize,
        proxy_factor: usize,
        proxy_seed: u64,
    ) -> Result<Self> {
        if batch_size == 0 || proxy_factor == 0 {
            return Err(Error::InvalidDims("batch size and proxy factor must be positive".into()));
        }
        if data.is_empty() {
            return Err(Error::EmptyVector);
        }
        let spec = model.norm_spec()?;
        Ok(Self {
            model,
            data,
            loss,
            batch_size,
            proxy_factor,
            spec,
            proxy_rng: Rng::new(proxy_seed),
        })
    }

    pub fn with_backend(mut self, backend: SpectralBackend) -> Self {
        self.spec = self.spec.with_backend(backend);
        self
    }

    fn batch_grad(&mut self, x: &[Matrix], size: usize, rng: &mut Rng) -> Result<(f64, Vec<Matrix>)> {
        self.model.set_params(x)?;
        let n = self.data.len();
        let idx: Vec<usize> = (0..size).map(|_| rng.below(n)).collect();
        self.model.loss_and_grad(&self.data.select(&idx), self.loss)
    }
}

impl Objective for MlpObjective {
    fn norm_spec(&self) -> &ModelNormSpec {
        &self.spec
    }

    fn sample(&mut self, x: &[Matrix], rng: &mut Rng) -> Result<(f64, Vec<Matrix>)> {
        self.batch_grad(x, self.batch_size, rng)
    }

    fn reference(&mut self, x: &[Matrix]) -> Result<Vec<Matrix>> {
        let mut rng = self.proxy_rng.clone();
        let out = self.batch_grad(x, self.batch_size * self.proxy_factor, &mut rng)?;
        self.proxy_rng = rng;
        Ok(out.1)
    }

    fn reference_kind(&self) -> Reference {
        Reference::BatchProxy(self.proxy_factor)
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub algo: Algorithm,
    pub schedule: ScheduleSpec,
    /// Weight decay, used by `uscg_wd` only.
    #[serde(default)]
    pub mu: f64,
    #[serde(default = "yes")]
    pub first_step_full_alpha: bool,
}

impl OptimizerConfig {
    pub fn new(algo: Algorithm, schedule: ScheduleSpec) -> Self {
        Self {
            algo,
            schedule,
            mu: 0.0,
            first_step_full_alpha: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(Error::OutOfRange {
                name: "mu",
                value: self.mu,
                range: "[0, 1]",
            });
        }
        Ok(())
    }

    fn state(&self, spec: &ModelNormSpec) -> OptimizerState {
        let s = OptimizerState::new(self.algo, spec).with_mu(self.mu);
        if self.first_step_full_alpha {
            s
        } else {
            s.without_first_step_override()
        }
    }
}

/// The optimizer's current estimate of the gradient.
fn estimate(state: &OptimizerState, g: &[Matrix], alpha: f64) -> Vec<Matrix> {
    match state.algo {
        Algorithm::Uscg | Algorithm::Scg | Algorithm::UscgWd => state.d.clone(),
        // The Muon buffer sums gradients with weights β^j; scaling by 1 - β
        // turns it into an average.
        Algorithm::MuonPlain | Algorithm::MuonNesterov => {
            state.d.iter().map(|b| b.scale(alpha)).collect()
        }
        Algorithm::Almond | Algorithm::Ssd | Algorithm::Sgd => g.to_vec(),
    }
}

fn l2_distance(a: &[Matrix], b: &[Matrix]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| {
            let d = p.sub(q);
            d.dot(&d)
        })
        .sum::<f64>()
        .sqrt()
}

/// Runs `opt.schedule.horizon` steps from `x`, updating it in place.
///
/// With `with_reference` off the problem's reference gradient is never
/// evaluated, the reference and norm columns hold NaN and `feasible` is false.
/// Spectral norms need a full SVD, which dominates wide runs otherwise.
pub fn run_optimizer(
    obj: &mut dyn Objective,
    x: &mut [Matrix],
    opt: &OptimizerConfig,
    rng: &mut Rng,
    with_reference: bool,
) -> Result<RunDiagnostics> {
    opt.validate()?;
    let spec = obj.norm_spec().clone();
    let mut state = opt.state(&spec);
    let mut diag = RunDiagnostics::new(if with_reference {
        obj.reference_kind()
    } else {
        Reference::Skipped
    });
    for k in 1..=opt.schedule.horizon {
        let gamma = opt.schedule.gamma_at(k)?;
        let alpha = opt.schedule.alpha_at(k)?;
        let (loss, g) = obj.sample(x, rng)?;
        if !loss.is_finite() {
            return Err(Error::Numerical {
                step: k,
                what: format!("loss is {loss}"),
            });
        }
        if g.iter().any(|m| !m.is_finite()) {
            return Err(Error::Numerical {
                step: k,
                what: "non-finite gradient".into(),
            });
        }
        let (dual, gap, reference) = if with_reference {
            let r = obj.reference(x)?;
            (composite_dual_norm(&r, &spec)?, fw_gap(&r, x, &spec)?, Some(r))
        } else {
            (f64::NAN, f64::NAN, None)
        };
        let cnorm = if with_reference {
            composite_norm(x, &spec)?
        } else {
            f64::NAN
        };
        state.apply(x, &g, gamma, alpha, &spec)?;
        if x.iter().any(|m| !m.is_finite()) {
            return Err(Error::Numerical {
                step: k,
                what: "non-finite parameters".into(),
            });
        }
        let error_proxy = match &reference {
            Some(r) => l2_distance(&estimate(&state, &g, alpha), r),
            None => f64::NAN,
        };
        diag.push(StepRecord {
            step: k,
            gamma,
            alpha,
            loss,
            dual_grad_norm: dual,
            fw_gap: gap,
            composite_norm: cnorm,
            error_proxy,
            feasible: cnorm <= 1.0 + FEASIBLE_TOL,
        })?;
    }
    Ok(diag)
}

/// Layer norm presets selectable from a config.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Image,
    OneHot,
    WeightShared,
    SameSpectral,
    SameColNorm,
    SameRowNorm,
    SameSign,
}

fn default_activation() -> Activation {
    Activation::Relu
}

fn default_input() -> InputKind {
    InputKind::Image
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub preset: Preset,
    /// Hidden widths; input and output sizes come from the data.
    pub hidden: Vec<usize>,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    #[serde(default)]
    pub bias: bool,
    /// Overrides the boundary initialization of every layer.
    #[serde(default)]
    pub init: Option<InitScheme>,
    /// Input kind for the same-norm presets.
    #[serde(default = "default_input")]
    pub input: InputKind,
    #[serde(default)]
    pub backend: SpectralBackend,
}

impl ModelConfig {
    pub fn new(preset: Preset, hidden: Vec<usize>) -> Self {
        Self {
            preset,
            hidden,
            activation: default_activation(),
            bias: false,
            init: None,
            input: default_input(),
            backend: SpectralBackend::default(),
        }
    }

    pub fn layer_specs(&self, d_in: usize, d_out: usize) -> Result<Vec<LayerSpec>> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 2);
        dims.push(d_in);
        dims.extend_from_slice(&self.hidden);
        dims.push(d_out);
        let same = |family| same_norm_config(family, self.input, &dims, self.activation, self.bias);
        let mut specs = match self.preset {
            Preset::Image => build_config(Domain::Image, &dims, self.activation, self.bias)?,
            Preset::OneHot => build_config(Domain::OneHot, &dims, self.activation, self.bias)?,
            Preset::WeightShared => {
                build_config(Domain::WeightShared, &dims, self.activation, self.bias)?
            }
            Preset::SameSpectral => same(NormKind::Spectral)?,
            Preset::SameColNorm => same(NormKind::ColNorm)?,
            Preset::SameRowNorm => same(NormKind::RowNorm)?,
            Preset::SameSign => same(NormKind::Sign)?,
        };
        if let Some(init) = self.init {
            for s in &mut specs {
                s.init = init;
            }
        }
        Ok(specs)
    }
}

fn default_batch() -> usize {
    32
}

fn default_proxy() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub optimizer: OptimizerConfig,
    pub problem: ProblemSpec,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    /// Size of the reference batch relative to `batch_size`.
    #[serde(default = "default_proxy")]
    pub proxy_factor: usize,
    #[serde(default = "yes")]
    pub record_reference: bool,
    #[serde(default)]
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        self.problem.validate()?;
        if matches!(self.problem.kind, ProblemKind::StochasticQuadratic(_)) {
            return Err(Error::InvalidDims(
                "train needs a classification problem; use the rate harness for the quadratic".into(),
            ));
        }
        if self.batch_size == 0 || self.proxy_factor == 0 {
            return Err(Error::InvalidDims("batch_size and proxy_factor must be positive".into()));
        }
        if self.model.hidden.contains(&0) {
            return Err(Error::InvalidDims("hidden widths must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub initial: MlpModel,
    pub model: MlpModel,
    pub diagnostics: RunDiagnostics,
    pub train_loss: f64,
    pub test_loss: f64,
    pub test_accuracy: f64,
}

/// Trains on already loaded data.
pub fn train_on(cfg: &TrainConfig, data: &Dataset) -> Result<TrainOutcome> {
    cfg.validate()?;
    let specs = cfg.model.layer_specs(data.dim(), data.classes)?;
    let initial = MlpModel::init(&specs, derive_seed(cfg.seed, 0))?;
    let mut obj = MlpObjective::new(
        initial.clone(),
        data.train.clone(),
        Loss::Logistic,
        cfg.batch_size,
        cfg.proxy_factor,
        derive_seed(cfg.seed, 2),
    )?
    .with_backend(cfg.model.backend);
    let mut x = initial.params();
    let mut rng = Rng::with_stream(cfg.seed, 1);
    let diagnostics = run_optimizer(&mut obj, &mut x, &cfg.optimizer, &mut rng, cfg.record_reference)?;
    let mut model = initial.clone();
    model.set_params(&x)?;
    let train_loss = model.loss(&data.train, Loss::Logistic)?;
    let test_loss = model.loss(&data.test, Loss::Logistic)?;
    let test_accuracy = match &data.test.targets {
        Targets::Classes(c) => model.accuracy(&data.test.inputs, c)?,
        Targets::Values(_) => f64::NAN,
    };
    Ok(TrainOutcome {
        initial,
        model,
        diagnostics,
        train_loss,
        test_loss,
        test_accuracy,
    })
}

pub fn train(cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    train_on(cfg, &cfg.problem.dataset()?)
}
