//! Device geometry and the temporally correlated channel model.

mod fading;
mod geometry;
mod model;
mod pathloss;

pub use fading::{evolve_nlos, fresh_nlos};
pub use geometry::{steering_vector, ArrayGeometry, FlightTrack, Position3D, Trajectory};
pub use model::{
    au_channel, los_component, tu_channel, AuLinkStats, ChannelConfig, ChannelModel, ChannelSet, FadingState,
};
pub use pathloss::{
    db_to_linear, fsp_path_loss, fsp_path_loss_db, linear_to_db, uma_los_probability, uma_path_loss,
    uma_path_loss_db, SPEED_OF_LIGHT,
};
