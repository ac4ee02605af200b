//! Incompatibility of quantum channels and measurements.
//!
//! The crate computes robustness- and weight-based incompatibility measures,
//! diamond distances and measurement errors through semidefinite programs,
//! and checks the error-disturbance tradeoffs that connect them.

pub mod error;
pub mod linalg;
pub mod measures;
pub mod quantum;
pub mod sdp;
pub mod sweep;
pub mod tradeoff;

pub use error::{Error, Result};
