//! Training with linear minimization oracles over norm balls.
//!
//! The crate is layered: [`linalg`] holds dense matrix primitives, [`norms`]
//! the oracles and norms, [`optim`] the update rules and schedules, [`models`]
//! the MLPs they train and [`experiments`] the harnesses built on top.

pub mod error;
pub mod experiments;
pub mod linalg;
pub mod models;
pub mod norms;
pub mod optim;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use models::{Activation, Domain, InitScheme, LayerSpec, Loss, MlpModel};
pub use norms::{LayerNorms, ModelNormSpec, NormKind, NormSpec, SpectralBackend};
pub use optim::{Algorithm, OptimizerState, ScheduleSpec};
