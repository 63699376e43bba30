//! Desk-scale harnesses: coordinate checks, learning-rate transfer sweeps,
//! convergence-rate fits and the data they run on.

pub mod coord;
pub mod data;
pub mod diagnostics;
pub mod problems;
pub mod rate;
pub mod stats;
pub mod sweep;
pub mod train;

pub use coord::{coordinate_check, CoordCheckConfig, CoordReport, CoordRow};
pub use data::{load_idx, parse_idx_images, parse_idx_labels};
pub use diagnostics::{Reference, RunDiagnostics, StepRecord};
pub use problems::{
    gen_synthetic, Dataset, IdxSpec, ProblemKind, ProblemSpec, QuadraticSpec, StochasticQuadratic,
    SyntheticSpec,
};
pub use rate::{
    error_decay_probe, rate_harness, AlphaMode, ErrorProbeConfig, ErrorProbeReport, RateConfig,
    RateReport,
};
pub use sweep::{lr_transfer_sweep, SweepConfig, SweepReport};
pub use train::{
    run_optimizer, train, train_on, ModelConfig, Objective, OptimizerConfig, Preset, TrainConfig,
    TrainOutcome,
};
