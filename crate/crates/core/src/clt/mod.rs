//! CLT engine: mean and covariance kernels of the limiting Gaussian law of
//! linear spectral statistics, contour integration of those kernels, and the
//! closed-form / unit-circle special paths for `R M = I`.
//!
//! All `lim (1/n) sum` plug-ins are evaluated as `y * (1/p) sum` with the
//! caller's ratio y, which keeps every path consistent at finite sizes.

mod context;
mod identity;
mod integrate;
mod kernels;
mod resolvent;
mod unit_circle;

pub use context::{CltContext, NodeData, Structure};
pub use identity::{identity_case_moments, CltMoments};
pub use integrate::{
    build_contour, clt_cov, clt_cov_cross, clt_mean, cov_contour_pair, mean_contour,
    IntegralDiagnostics,
};
pub use kernels::{cov_kernel, cov_kernel_cross, em_kernel};
pub use resolvent::{resolvent, resolvent_derivative};
pub use unit_circle::{unit_circle_cov, unit_circle_mean};
