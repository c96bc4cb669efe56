//! Self-normalized portmanteau diagnostics for weak ARMA and VARMA models.
//!
//! The crate covers the whole workflow: simulating (V)ARMA processes driven
//! by strong or weak (uncorrelated but dependent) white noises, fitting them
//! by Gaussian quasi-maximum likelihood, and checking the fit with
//! portmanteau statistics whose normalization is built from partial sums of
//! the residual autocovariance score, so that no long-run variance has to be
//! estimated. The limiting law of the self-normalized statistic is pivotal
//! and is tabulated by Monte Carlo in [`dist`].
//!
//! Module map:
//!
//! - [`model`]: parametrization, root checks, residual recursions
//! - [`simulate`]: strong and weak noises, VARMA trajectories
//! - [`estimate`]: QMLE fit, `Ĵ` and `Φ̂_m`
//! - [`selfnorm`]: autocovariances, normalization matrix, test statistics
//! - [`dist`]: the `U_K` law and chi-squared utilities
//! - [`experiments`]: Monte Carlo size/power harness
//! - [`cli`]: CSV ingestion and the returns workflow

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dist;
pub mod error;
pub mod estimate;
pub mod experiments;
pub mod linalg;
pub mod model;
pub mod optim;
pub mod selfnorm;
pub mod simulate;

pub use error::{Error, Result};
pub use estimate::{qmle_fit, InformationMatrices, ParamEstimate};
pub use model::{ResidualSet, TimeSeries, VarmaSpec};
pub use simulate::{NoiseKind, RngStream};
