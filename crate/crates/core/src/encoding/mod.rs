//! Mappings between simulator state and agent inputs/outputs.

mod action;
mod bs_obs;
mod codebook;
mod features;
mod reward;
mod sets;
mod tu_obs;

use serde::{Deserialize, Serialize};

use crate::channel::AuLinkStats;
use crate::phy::{AssociationMap, PhySnapshot};

pub use action::{action_dim, decode_bs_action, random_action, ActionScales};
pub use bs_obs::{bs_observation, bs_observation_dim, bs_schema, BsCurrent, BsObsDims};
pub use codebook::{Codebook, CompressedChannel};
pub use features::{index_feature, FeatureScale, Field, ObsWriter};
pub use reward::{beam_leakage, bs_cost, bs_reward, penalty_reward, tu_reward};
pub use sets::{initial_sets, select_interferer_sets, top_indices, InterfererSets, SetSizes};
pub use tu_obs::{tu_observation, tu_observation_dim, tu_schema};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingParams {
    pub codebook_size: usize,
    pub nc: usize,
    pub sets: SetSizes,
    pub scale: FeatureScale,
    pub i_max: f64,
}

/// Everything recorded about one finished slot. Observations built in slot
/// `t` read their delayed blocks only from the `SlotInfo` of slot `t - 1`.
#[derive(Clone, Debug)]
pub struct SlotInfo {
    pub slot: usize,
    pub assoc: AssociationMap,
    /// `p_k`.
    pub power: Vec<f64>,
    pub phy: PhySnapshot,
    /// `[bs][tu]`.
    pub compressed: Vec<Vec<CompressedChannel>>,
    /// `[bs][au]`.
    pub au_stats: Vec<Vec<AuLinkStats>>,
    /// `[tu][bs]`.
    pub strengths: Vec<Vec<f64>>,
    pub sets: InterfererSets,
}
