//! Extended parameterizations: random orthonormal projections that lift a short latent
//! vector to a full parameter vector, small feed-forward policies, and dynamic motor
//! primitive (DMP) trajectories with a tracking cost.

use thiserror::Error;

pub mod dmp;
pub mod mlp;
pub mod projection;

pub use dmp::{dmp_basis, dmp_forcing, dmp_rollout, tracking_cost, DmpParams, TrackingTask};
pub use mlp::{mlp_act, Activation, MlpLayout, MlpPolicy};
pub use projection::{lift, make_projection, BlockProjection, ProjectionMap, ProjectionSidecar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReprError {
    #[error("dimension error: {0}")]
    DimensionError(String),
    #[error("invalid DMP parameters: {0}")]
    InvalidDmp(String),
    #[error("DMP state became non-finite at sample {0}")]
    NumericOverflow(usize),
    #[error("trajectory length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}
