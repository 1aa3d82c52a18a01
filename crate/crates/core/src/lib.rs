//! Output regulation of linear hyperbolic systems by integral action.

pub mod cli;
pub mod error;
pub mod forwarding;
pub mod fundamental;
pub mod gain;
pub mod heat;
pub mod linalg;
pub mod model;
pub mod scenarios;
pub mod sim;

pub use error::{Error, Result};
pub use nalgebra;
pub use model::{AbstractLinearSystem, DisturbanceScenario, HyperbolicSystem};
