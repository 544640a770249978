//! Partial least squares regression by three-factor decomposition of the
//! cross-covariance matrix on a bi-Grassmann quotient manifold.
//!
//! The crate is organised bottom-up:
//!
//! - [`manifold`]: metric, projections, retraction and transport on
//!   Gr(N,R) × Gr(M,R) × ℝ^{R×R} under the scaled (preconditioned) metric;
//! - [`optimizer`]: Riemannian conjugate gradient with Armijo backtracking;
//! - [`models`]: the manifold PLSR estimator, the SIMPLS baseline and the
//!   truncated SVD used as the closed-form optimum;
//! - [`pipeline`]: epoch datasets, filtering, decimation, folds,
//!   cross-validation and a synthetic epoch generator;
//! - [`formats`]: JSON, CSV and epoch-directory I/O.

// `!(x > 0.0)` style guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod formats;
pub mod linalg;
pub mod manifold;
pub mod models;
pub mod optimizer;
pub mod pipeline;

pub use error::{Error, Result};
pub use linalg::Mat;
pub use manifold::{MetricMode, ProductPoint, TangentTriple};
pub use models::{DataMatrixPair, PlsrModel, Variant};
pub use optimizer::{OptimConfig, TerminationReason, Trace};
pub use pipeline::EpochDataset;
