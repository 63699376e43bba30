//! Config trees: defaults, file overlay, `--set` overrides and the key
//! documentation shown in `--help`.

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use scion_core::experiments::{
    rate::AlphaMode, CoordCheckConfig, ModelConfig, OptimizerConfig, Preset, ProblemKind,
    ProblemSpec, QuadraticSpec, SweepConfig, SyntheticSpec, TrainConfig,
};
use scion_core::models::Activation;
use scion_core::norms::contract::ContractConfig;
use scion_core::optim::{AlphaSchedule, GammaSchedule};
use scion_core::{Algorithm, NormKind, ScheduleSpec};

use crate::error::CliError;

/// Keys whose value selects an enum variant. Changing one discards the
/// sibling keys of the old variant.
pub const TAG_KEYS: [&str; 3] = ["type", "kind", "backend"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    LmoCheck,
    Train,
    CoordCheck,
    Sweep,
    Rate,
}

impl Command {
    pub const ALL: [Command; 5] = [
        Command::LmoCheck,
        Command::Train,
        Command::CoordCheck,
        Command::Sweep,
        Command::Rate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::LmoCheck => "lmo-check",
            Command::Train => "train",
            Command::CoordCheck => "coord-check",
            Command::Sweep => "sweep",
            Command::Rate => "rate",
        }
    }

    /// Default config tree for the command.
    pub fn defaults(self) -> Value {
        let v = match self {
            Command::LmoCheck => serde_json::to_value(ContractConfig::default()),
            Command::Train => serde_json::to_value(default_train()),
            Command::CoordCheck => serde_json::to_value(default_coord()),
            Command::Sweep => serde_json::to_value(default_sweep()),
            Command::Rate => serde_json::to_value(default_rate()),
        };
        v.expect("defaults serialize")
    }

    pub fn keys(self) -> &'static [KeyDoc] {
        match self {
            Command::LmoCheck => LMO_KEYS,
            Command::Train => TRAIN_KEYS,
            Command::CoordCheck => COORD_KEYS,
            Command::Sweep => SWEEP_KEYS,
            Command::Rate => RATE_KEYS,
        }
    }

    /// Overrides that switch the tree to a non-default enum variant.
    pub fn variants(self) -> &'static [Variant] {
        match self {
            Command::LmoCheck => LMO_VARIANTS,
            Command::Train => TRAIN_VARIANTS,
            Command::CoordCheck => &[],
            Command::Sweep => &[],
            Command::Rate => RATE_VARIANTS,
        }
    }

    /// Deserialize and validate a resolved tree, returning it re-serialized
    /// with every default filled in.
    pub fn validate(self, tree: &Value) -> Result<Value, CliError> {
        match self {
            Command::LmoCheck => {
                let c: ContractConfig = typed(tree)?;
                if c.samples == 0 || c.max_dim == 0 {
                    return Err(CliError::Config("samples and max_dim must be positive".into()));
                }
                canonical(&c)
            }
            Command::Train => {
                let c: TrainConfig = typed(tree)?;
                c.validate().map_err(|e| CliError::Config(e.to_string()))?;
                canonical(&c)
            }
            Command::CoordCheck => {
                let c: CoordCheckConfig = typed(tree)?;
                c.validate().map_err(|e| CliError::Config(e.to_string()))?;
                canonical(&c)
            }
            Command::Sweep => {
                let c: SweepConfig = typed(tree)?;
                c.validate().map_err(|e| CliError::Config(e.to_string()))?;
                canonical(&c)
            }
            Command::Rate => {
                let c: RateCommand = typed(tree)?;
                c.harness().validate().map_err(|e| CliError::Config(e.to_string()))?;
                if c.probe_horizon == Some(0) || c.probe_trials == 0 {
                    return Err(CliError::Config("probe_horizon and probe_trials must be positive".into()));
                }
                canonical(&c)
            }
        }
    }

    pub fn help_text(self) -> String {
        let keys = self.keys();
        let width = keys.iter().map(|k| k.key.len()).max().unwrap_or(0);
        let mut out = String::from("Config keys (JSON file and --set path=value):\n");
        for k in keys {
            out.push_str(&format!("  {:width$}  {}", k.key, k.doc));
            if let Some(v) = k.variant {
                out.push_str(&format!(" [with {v}]"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn typed<T: DeserializeOwned>(tree: &Value) -> Result<T, CliError> {
    serde_json::from_value(tree.clone()).map_err(|e| CliError::Config(e.to_string()))
}

fn canonical<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Config(e.to_string()))
}

/// First 12 hex digits of the SHA-256 of the compact JSON form.
pub fn config_hash(tree: &Value) -> String {
    let text = serde_json::to_string(tree).expect("json values serialize");
    let digest = Sha256::digest(text.as_bytes());
    hex::encode(digest)[..12].to_string()
}

fn tag_of(v: &Map<String, Value>) -> Option<(&str, &str)> {
    TAG_KEYS
        .iter()
        .find_map(|k| v.get(*k).and_then(Value::as_str).map(|s| (*k, s)))
}

/// Recursive overlay. Objects merge key by key unless their variant tags
/// differ, in which case the overlay replaces the base.
pub fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            let switch = match (tag_of(b), tag_of(&o)) {
                (Some((kb, vb)), Some((ko, vo))) => kb == ko && vb != vo,
                _ => false,
            };
            if switch {
                *b = o;
                return;
            }
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, over) => *slot = over,
    }
}

/// `raw` as JSON when it parses, else as a plain string.
pub fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Applies one `path=value` override.
pub fn apply_set(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects path=value, got `{assignment}`")))?;
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad key path `{path}`")));
    }
    let value = parse_value(raw);
    let mut node = root;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        if !node.is_object() {
            *node = Value::Object(Map::new());
        }
        let obj = node.as_object_mut().expect("made an object");
        if last {
            let retag = TAG_KEYS.contains(part)
                && obj.get(*part).and_then(Value::as_str).is_some()
                && obj.get(*part) != Some(&value);
            if retag {
                obj.clear();
            }
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert(Value::Object(Map::new()));
    }
    Ok(())
}

/// Defaults, then the file, then `--seed`, then each `--set` in order.
pub fn resolve(
    cmd: Command,
    file: Option<&Path>,
    seed: Option<u64>,
    sets: &[String],
) -> Result<Value, CliError> {
    let mut tree = cmd.defaults();
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let over: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if !over.is_object() {
            return Err(CliError::Config("config file must hold a JSON object".into()));
        }
        merge(&mut tree, over);
    }
    if let Some(s) = seed {
        tree["seed"] = Value::from(s);
    }
    for s in sets {
        apply_set(&mut tree, s)?;
    }
    cmd.validate(&tree)
}

/// Every leaf path of a tree. Arrays and nulls count as leaves.
pub fn leaf_paths(v: &Value) -> Vec<String> {
    fn walk(v: &Value, prefix: &str, out: &mut Vec<String>) {
        match v {
            Value::Object(m) if !m.is_empty() => {
                for (k, child) in m {
                    let p = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(child, &p, out);
                }
            }
            _ => out.push(prefix.to_string()),
        }
    }
    let mut out = Vec::new();
    walk(v, "", &mut out);
    out
}

#[derive(Debug, Clone, Copy)]
pub struct KeyDoc {
    pub key: &'static str,
    pub doc: &'static str,
    /// Name of the variant (see [`Variant`]) this key belongs to.
    pub variant: Option<&'static str>,
}

#[derive(Debug, Clone, Copy)]
pub struct Variant {
    pub name: &'static str,
    pub sets: &'static [&'static str],
}

const fn key(key: &'static str, doc: &'static str) -> KeyDoc {
    KeyDoc {
        key,
        doc,
        variant: None,
    }
}

const fn vkey(key: &'static str, doc: &'static str, variant: &'static str) -> KeyDoc {
    KeyDoc {
        key,
        doc,
        variant: Some(variant),
    }
}

const LMO_KEYS: &[KeyDoc] = &[
    key("samples", "random inputs per norm kind"),
    key("max_dim", "largest row or column count drawn"),
    key("seed", "random seed"),
    key("backend.backend", "spectral oracle: exact_svd | newton_schulz"),
    vkey("backend.iters", "Newton-Schulz iterations", "backend.backend=newton_schulz"),
];

const LMO_VARIANTS: &[Variant] = &[Variant {
    name: "backend.backend=newton_schulz",
    sets: &[r#"backend={"backend":"newton_schulz","iters":5}"#],
}];

const TRAIN_KEYS: &[KeyDoc] = &[
    key("model.preset", "image | one_hot | weight_shared | same_spectral | same_col_norm | same_row_norm | same_sign"),
    key("model.hidden", "hidden widths, e.g. [64, 64]"),
    key("model.activation", "relu | scaled_relu2 | scaled_gelu | tanh | identity"),
    key("model.bias", "add biases to all but the last layer"),
    key("model.init", "null (boundary init) | semi_orthogonal | col_normalized_gaussian | row_normalized_gaussian | random_sign | kaiming"),
    key("model.input", "input kind for same_* presets: image | one_hot"),
    key("model.backend.backend", "spectral oracle: exact_svd | newton_schulz"),
    vkey("model.backend.iters", "Newton-Schulz iterations", "model.backend.backend=newton_schulz"),
    key("optimizer.algo", "uscg | scg | uscg_wd | almond | muon_plain | muon_nesterov | ssd | sgd"),
    key("optimizer.schedule.gamma.kind", "step size schedule: constant | linear_decay | constant_then_linear"),
    vkey("optimizer.schedule.gamma.warmdown", "steps of linear decay at the end", "optimizer.schedule.gamma.kind=constant_then_linear"),
    key("optimizer.schedule.gamma0", "base step size in [0, 1]"),
    key("optimizer.schedule.alpha.kind", "averaging schedule: constant | vanishing (1/sqrt(k))"),
    key("optimizer.schedule.alpha.alpha", "constant averaging parameter in (0, 1]"),
    key("optimizer.schedule.horizon", "number of steps"),
    key("optimizer.mu", "weight decay for uscg_wd"),
    key("optimizer.first_step_full_alpha", "use alpha = 1 on the first step"),
    key("problem.kind.type", "synthetic_classification | idx_dataset"),
    key("problem.kind.dim", "input dimension"),
    key("problem.kind.classes", "number of classes"),
    key("problem.kind.clusters", "Gaussian clusters per class"),
    key("problem.kind.noise", "cluster jitter scale"),
    key("problem.kind.train_size", "training samples"),
    key("problem.kind.test_size", "test samples"),
    vkey("problem.kind.images", "IDX image file", "problem.kind.type=idx_dataset"),
    vkey("problem.kind.labels", "IDX label file", "problem.kind.type=idx_dataset"),
    vkey("problem.kind.test_images", "optional IDX test images", "problem.kind.type=idx_dataset"),
    vkey("problem.kind.test_labels", "optional IDX test labels", "problem.kind.type=idx_dataset"),
    key("problem.seed", "data generation seed"),
    key("batch_size", "minibatch size"),
    key("proxy_factor", "reference batch size as a multiple of batch_size"),
    key("record_reference", "compute the reference-gradient columns"),
    key("seed", "initialization and sampling seed"),
];

const TRAIN_VARIANTS: &[Variant] = &[
    Variant {
        name: "model.backend.backend=newton_schulz",
        sets: &[r#"model.backend={"backend":"newton_schulz","iters":5}"#],
    },
    Variant {
        name: "optimizer.schedule.gamma.kind=constant_then_linear",
        sets: &[r#"optimizer.schedule.gamma={"kind":"constant_then_linear","warmdown":50}"#],
    },
    Variant {
        name: "problem.kind.type=idx_dataset",
        sets: &[r#"problem.kind={"type":"idx_dataset","images":"train-images.idx","labels":"train-labels.idx"}"#],
    },
];

const COORD_KEYS: &[KeyDoc] = &[
    key("widths", "widths to compare, at least two"),
    key("depth", "number of layers, all of the given width"),
    key("gamma", "step size"),
    key("samples", "seeds averaged per width"),
    key("seed", "random seed"),
    key("input_dim", "fixed input size"),
    key("activation", "relu | scaled_relu2 | scaled_gelu | tanh | identity"),
];

const SWEEP_KEYS: &[KeyDoc] = &[
    key("widths", "hidden widths to compare"),
    key("gamma_max", "largest step size; the grid halves from here"),
    key("gamma_points", "grid size"),
    key("problem.dim", "input dimension"),
    key("problem.classes", "number of classes"),
    key("problem.clusters", "Gaussian clusters per class"),
    key("problem.noise", "cluster jitter scale"),
    key("problem.train_size", "training samples"),
    key("problem.test_size", "test samples"),
    key("epochs", "passes over the training set"),
    key("hidden_layers", "hidden layers per model"),
    key("algo", "optimizer, see train"),
    key("alpha", "constant averaging parameter"),
    key("preset", "layer norm preset, see train"),
    key("activation", "hidden activation"),
    key("batch_size", "minibatch size"),
    key("seed", "data, init and sampling seed"),
];

const RATE_KEYS: &[KeyDoc] = &[
    key("algo", "uscg (dual gradient norm) | scg (Frank-Wolfe gap) | other algorithms"),
    key("mode.type", "vanishing_alpha (gamma = 0.75 n^-3/4) | constant_alpha (gamma = 1/sqrt(n))"),
    vkey("mode.alpha", "averaging parameter", "mode.type=constant_alpha"),
    key("n_list", "horizons to run"),
    key("trials", "runs per horizon"),
    key("problem.dim", "quadratic dimension"),
    key("problem.sigma", "gradient noise level, E|noise|^2 = sigma^2"),
    key("problem.conditioning", "ratio of largest to smallest curvature"),
    key("norm", "vector norm: euclidean_vec | max_vec | rms_vec"),
    key("radius", "radius of the norm ball"),
    key("seed", "random seed"),
    key("probe_horizon", "null, or steps for the gradient-error probe"),
    key("probe_trials", "runs averaged by the probe"),
];

const RATE_VARIANTS: &[Variant] = &[Variant {
    name: "mode.type=constant_alpha",
    sets: &[r#"mode={"type":"constant_alpha","alpha":0.1}"#],
}];

/// Config of the `rate` command: the rate harness plus an optional probe of
/// the gradient-estimate error on the same problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateCommand {
    pub algo: Algorithm,
    pub mode: AlphaMode,
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub problem: QuadraticSpec,
    pub norm: NormKind,
    pub radius: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub probe_horizon: Option<usize>,
    #[serde(default = "twenty")]
    pub probe_trials: usize,
}

fn twenty() -> usize {
    20
}

impl RateCommand {
    pub fn harness(&self) -> scion_core::experiments::RateConfig {
        scion_core::experiments::RateConfig {
            algo: self.algo,
            mode: self.mode,
            n_list: self.n_list.clone(),
            trials: self.trials,
            problem: self.problem,
            norm: self.norm,
            radius: self.radius,
            seed: self.seed,
        }
    }

    pub fn probe(&self) -> Option<scion_core::experiments::ErrorProbeConfig> {
        self.probe_horizon.map(|horizon| scion_core::experiments::ErrorProbeConfig {
            problem: self.problem,
            horizon,
            trials: self.probe_trials,
            mode: AlphaMode::VanishingAlpha,
            gamma: None,
            norm: self.norm,
            radius: self.radius,
            seed: self.seed,
        })
    }
}

pub fn default_train() -> TrainConfig {
    let schedule = ScheduleSpec {
        gamma: GammaSchedule::Constant,
        gamma0: 0.05,
        alpha: AlphaSchedule::Constant { alpha: 0.1 },
        horizon: 200,
    };
    TrainConfig {
        model: ModelConfig::new(Preset::Image, vec![64]),
        optimizer: OptimizerConfig::new(Algorithm::Uscg, schedule),
        problem: ProblemSpec {
            kind: ProblemKind::SyntheticClassification(SyntheticSpec::new(32, 4, 2, 0.5)),
            seed: 0,
        },
        batch_size: 32,
        proxy_factor: 16,
        record_reference: true,
        seed: 0,
    }
}

pub fn default_coord() -> CoordCheckConfig {
    CoordCheckConfig {
        widths: vec![64, 256, 1024],
        depth: 3,
        gamma: 0.01,
        samples: 32,
        seed: 0,
        input_dim: 32,
        activation: Activation::Relu,
    }
}

pub fn default_sweep() -> SweepConfig {
    SweepConfig {
        widths: vec![128, 512],
        gamma_max: 0.8,
        gamma_points: 8,
        problem: SyntheticSpec::new(32, 4, 2, 1.5),
        epochs: 1,
        hidden_layers: 2,
        algo: Algorithm::Uscg,
        alpha: 1.0,
        preset: Preset::Image,
        activation: Activation::Relu,
        batch_size: 32,
        seed: 0,
    }
}

pub fn default_rate() -> RateCommand {
    RateCommand {
        algo: Algorithm::Uscg,
        mode: AlphaMode::VanishingAlpha,
        n_list: vec![100, 400, 1600, 6400],
        trials: 10,
        problem: QuadraticSpec {
            dim: 16,
            sigma: 1.0,
            conditioning: 10.0,
        },
        norm: NormKind::EuclideanVec,
        radius: 1.0,
        seed: 0,
        probe_horizon: None,
        probe_trials: 20,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn set_creates_and_overrides() {
        let mut v = json!({"a": {"b": 1}});
        apply_set(&mut v, "a.b=2.5").unwrap();
        apply_set(&mut v, "a.c=[1,2]").unwrap();
        apply_set(&mut v, "d=hello").unwrap();
        assert_eq!(v, json!({"a": {"b": 2.5, "c": [1, 2]}, "d": "hello"}));
        assert!(apply_set(&mut v, "nothing").is_err());
        assert!(apply_set(&mut v, "a..b=1").is_err());
    }

    #[test]
    fn retagging_drops_old_variant_fields() {
        let mut v = json!({"backend": {"backend": "newton_schulz", "iters": 5}});
        apply_set(&mut v, "backend.backend=exact_svd").unwrap();
        assert_eq!(v, json!({"backend": {"backend": "exact_svd"}}));
        let mut w = json!({"m": {"type": "a", "x": 1}});
        merge(&mut w, json!({"m": {"type": "b", "y": 2}}));
        assert_eq!(w, json!({"m": {"type": "b", "y": 2}}));
        merge(&mut w, json!({"m": {"y": 3}}));
        assert_eq!(w, json!({"m": {"type": "b", "y": 3}}));
    }

    #[test]
    fn defaults_validate() {
        for cmd in Command::ALL {
            cmd.validate(&cmd.defaults()).unwrap();
        }
    }

    #[test]
    fn hash_is_stable() {
        let v = json!({"a": 1});
        assert_eq!(config_hash(&v), config_hash(&v.clone()));
        assert_eq!(config_hash(&v).len(), 12);
    }
}
