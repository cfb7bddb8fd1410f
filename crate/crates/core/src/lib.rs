//! Robust quaternion PCA for color video: rank-one background, sparse
//! foreground, noise and a TV-regularized target.

pub mod bench;
pub mod error;
pub mod manifold;
pub mod metrics;
pub mod quaternion;
pub mod solver;
pub mod sparse;
pub mod tv;
pub mod video;

pub use error::{Error, Result};
pub use quaternion::{Quaternion, QuaternionMatrix};
pub use solver::{solve, Decomposition, SolverConfig};
