//! Norm balls and their linear minimization oracles.

mod composite;
pub mod contract;
mod lmo;
mod spec;
mod vector;

pub use composite::{
    composite_dual_norm, composite_lmo, composite_norm, composite_sharp, fw_gap, LayerNorms,
    ModelNormSpec,
};
pub use lmo::{dual_norm, lmo, lmo_with, op_norm, sharp_op, SpectralBackend};
pub use spec::{NormKind, NormSpec};
pub use vector::{vec_norm, VecNorm};
