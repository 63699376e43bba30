//! Momentum averaging, the oracle-based update rules and step-size schedules.

mod light;
mod schedule;
mod steps;

pub use light::{scion_light_update, ScionLight};
pub use schedule::{
    theory_gamma, theory_gamma_interval, AlphaSchedule, GammaSchedule, ScheduleSpec,
};
pub use steps::{
    almond_step, momentum_update, muon_step, scg_step, ssd_step, uscg_step, uscg_wd_step,
    Algorithm, OptimizerState, FEASIBILITY_SLACK,
};
