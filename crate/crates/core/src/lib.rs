//! Simulation and bootstrap inference for predictive regressions whose
//! regressor follows a local-to-unity, moderately deviated, unit-root or
//! explosive autoregression.
//!
//! The crate is organised bottom-up:
//!
//! * [`rng`] splittable ChaCha20 substreams and the [`rng::DrawSource`] trait
//! * [`dgp`] innovation pairs, AR(1) regressors and the predictive system
//! * [`estimators`] OLS, IVX, long-run covariance and FM-OLS
//! * [`statistics`] self-normalized and studentized test statistics
//! * [`bootstrap`] wild, i.i.d. residual, residual block and sieve schemes
//! * [`limitdist`] Brownian and Ornstein-Uhlenbeck limit functionals
//! * [`harness`] Monte Carlo experiments and reports
//! * [`io`] config parsing, report and series serialization

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod dgp;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod io;
pub mod limitdist;
pub mod rng;
pub mod statistics;

pub use error::{Error, Result};
