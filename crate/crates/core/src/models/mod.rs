//! MLPs with manual backpropagation, initialization schemes and the
//! per-layer norm presets.

mod activation;
pub mod checkpoint;
mod config;
mod mlp;

pub use activation::Activation;
pub use config::{
    build_config, model_norm_spec, same_norm_config, validate_specs, Domain, InitScheme,
    InputKind, LayerSpec,
};
pub use mlp::{loss_at_logits, Batch, ForwardCache, Loss, MlpModel, Targets};
