//! Diffusions with rank-dependent coefficients built from a covariance field
//! and an invariant density, together with simulation and path analysis.

pub mod analysis;
pub mod error;
pub mod exec;
pub mod model;
pub mod models;
pub mod sim;

pub use error::{Error, Result};
pub use exec::Execution;
pub use model::{CellLabel, DomainKind, ModelSpec, RankView, StatePoint};
