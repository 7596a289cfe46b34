//! Cognitive aerial-terrestrial network simulator: channel models, PHY
//! accounting, classical optimizers, learning agents and the slot loop.

pub mod channel;
pub mod encoding;
pub mod error;
pub mod learn;
pub mod linalg;
pub mod optim;
pub mod phy;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec};
pub use phy::{AssociationMap, BeamformerSet, PhySnapshot};
