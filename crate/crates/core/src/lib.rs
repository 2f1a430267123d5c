//! Sigma-point filtering primitives.
//!
//! The crate provides the numerical building blocks (Cholesky square root,
//! matrix exponential, RK4), the model traits consumed by every filter, the
//! unscented transform, five estimators (EKF, UKF, simplex UKF,
//! single-propagation UKF and its extrapolated variant), empirical fidelity
//! diagnostics, and the analytic cost model used to compare them.

pub mod complexity;
pub mod diagnostics;
pub mod error;
pub mod filters;
pub mod models;
pub mod numerics;
pub mod unscented;

pub use error::{Error, Result};
pub use filters::{FilterConfig, FilterKind, PredictedMoments, StateEstimate};
pub use models::{DynamicsModel, JacobianMode, MeasurementModel};
pub use unscented::SigmaPointSet;
