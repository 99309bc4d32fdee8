//! Tensor-train models over uniform grids, constrained sampling, and
//! sampling-based MPC built on top of both.

pub mod dist;
pub mod error;
pub mod grid;
pub mod harness;
pub mod io;
mod linalg;
pub mod poe;
pub mod seeds;
pub mod smpc;
pub mod stats;
pub mod tt;
pub mod worlds;

pub use dist::TtDistribution;
pub use error::{Error, Result};
pub use grid::{Grid, GridDim};
pub use smpc::{ControllerConfig, GaussianPolicy, Method};
pub use tt::TtModel;
pub use worlds::World;
