//! Classical two-stage baseline: association with power control, then
//! coordinated beamforming.

mod dcd;
mod power;
mod sc;
mod wmmse;

pub use dcd::{
    assignment_objective, association_sinr, dcd_associate, dual_objective, utilities, DcdConfig, DcdState,
};
pub use power::{stage1_ua_power, sum_utility, Stage1Config, Stage1Outcome};
pub use sc::{argmax, sc_associate};
pub use wmmse::{mrt_init, truncated_mrt, wmmse_cbf, WmmseConfig, WmmseIterate, WmmseOutcome, WmmseProblem};
