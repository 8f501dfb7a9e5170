//! Exact and heavy-traffic analysis of single-server queues whose arrival
//! and service rates are resampled, with simulation oracles.

pub mod endogenous;
pub mod error;
pub mod flow;
pub mod heavy_traffic;
pub mod inversion;
pub mod model;
pub mod numeric;
pub mod output;
pub mod qbd;
pub mod sim;
pub mod transient;

pub use error::{Error, Result};
pub use model::*;
