//! Cache placement, user association and power control for cache-enabled dense small-cell networks.

pub mod baselines;
pub mod benders;
pub mod error;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod placement;
pub mod popularity;
pub mod scenario;

pub use error::{Error, Result};
