//! Regularized covariance and correlation estimation for elliptical
//! distributions, plus a Monte-Carlo adaptive-detection harness.
//!
//! The crate provides four layers:
//!
//! * [`matlin`] — small dense Hermitian linear algebra: eigendecomposition,
//!   matrix square roots, the Hermitian matrix exponential, and the
//!   convergence residual shared by every iterative estimator.
//! * [`anscm`] — the expected normalized sample covariance matrix
//!   `E[y y† / (y† y)]` of a zero-mean elliptical vector with a given scatter
//!   matrix: closed form over the complex-circular field, Monte-Carlo
//!   estimation over either field, and the eigenvalue-spacing guard the
//!   closed form needs.
//! * [`estimators`] — regularized maximum-likelihood scatter/covariance
//!   estimators (`reg_tyler`, `reg_cg_cov`, the sample covariance blends) and
//!   their outlier-rejecting partial variants, all sharing one generic
//!   implementation over real and complex-circular scalars.
//! * [`detect`] — an adaptive-detection simulation: sequential estimator
//!   streams over batches of training data, matched-filter and normalized
//!   matched-filter statistics, empirical threshold calibration, and
//!   detection-probability curves, all reproducible from one master seed.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the default `std`
//! feature only toggles the standard library in dependencies.
//!
//! ```
//! use ellcov::estimators::{reg_tyler, EstimatorConfig, SampleBatch};
//! use ellcov::matlin::HpdMatrix;
//! use ellcov::Complex64;
//!
//! // Shrink a 2x2 scatter estimate three quarters of the way toward the data.
//! let prior = HpdMatrix::<Complex64>::identity(2);
//! let batch = SampleBatch::from_rows(&[
//!     vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 1.0)],
//!     vec![Complex64::new(0.5, -0.5), Complex64::new(1.0, 0.0)],
//!     vec![Complex64::new(0.0, 1.5), Complex64::new(0.3, 0.0)],
//! ])
//! .unwrap();
//! let out = reg_tyler(&prior, &batch, &EstimatorConfig::new(0.75)).unwrap();
//! assert!(out.converged);
//! assert!((out.matrix.as_mat().trace_re() - 1.0).abs() < 1e-12);
//! ```

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]
// `!(x > 0.0)` deliberately treats NaN as a failure wherever positivity is
// required; routing the comparison through `partial_cmp` would bury that.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod anscm;
pub mod detect;
mod error;
pub mod estimators;
pub mod matlin;
mod rng;
mod scalar;
#[cfg(test)]
pub(crate) mod test_util;

pub use detect::{DetectionCurve, DetectorKind, EstimatorKind, Scenario};
pub use error::{AnscmError, DetectError, EstimError, MatError};
pub use estimators::{EstimateResult, EstimatorConfig, SampleBatch};
pub use matlin::{EigenPair, HpdMatrix, Mat};
pub use num_complex::Complex64;
pub use scalar::{Field, Scalar};
