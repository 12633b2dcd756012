//! Pseudospectral simulation and diagnostics for the viscous stochastic
//! Camassa–Holm equation with transport noise on the circle.

pub mod error;
pub mod grid;
pub mod diagnostics;
pub mod entropy;
pub mod kernel;
pub mod parallel;
pub mod sde;
pub mod stats;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use grid::{Field, Grid};
