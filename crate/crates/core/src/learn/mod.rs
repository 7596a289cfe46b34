//! Neural agents: the BS actor-critic trained by constrained update
//! projection or penalised PPO, and the TU dueling double Q-learner.

pub mod adam;
pub mod cup;
pub mod d3qn;
pub mod gae;
pub mod losses;
pub mod mlp;
pub mod policy;

pub use adam::Adam;
pub use cup::{cup_update, ppo_update, update_nu, ActorCritic, CupHyper, TrajectoryBuffer, Transition, UpdateStats};
pub use d3qn::{
    aggregate_row, argmax, d3qn_loss, d3qn_targets, decay_eps, epsilon_greedy, target_sync_due, D3qnAgent, D3qnHyper, DuelingQ, Experience,
    ReplayMemory, EPS_INIT, EPS_MIN,
};
pub use gae::{gae, td_residuals};
pub use losses::{improve_loss, project_loss, value_loss};
pub use mlp::{Activation, Mlp};
pub use policy::{clip_action, GaussianPolicy, ACTION_FLOOR};
