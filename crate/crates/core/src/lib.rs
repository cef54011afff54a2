//! Double/debiased machine learning for partially linear models.
//!
//! The crate is organised bottom-up:
//!
//! - [`dataset`] turns delimited firm-year files into outcome, treatment and
//!   covariate matrices (sample filters, leverage ratios, dummy coding).
//! - [`learners`] provides the nuisance models: random forests, OLS, LASSO
//!   and Ridge behind one fit/predict surface.
//! - [`dml`] cross-fits the nuisances and solves the partialling-out score
//!   (DML1 and DML2), with repetition aggregation and sandwich standard errors.
//! - [`inference`] adjusts many simultaneous treatment effects: multiplier
//!   bootstrap, Romano-Wolf step-down, Holm and Bonferroni.
//! - [`synthetic`] generates partially linear data with known effects and runs
//!   Monte Carlo studies against it.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod dml;
pub mod error;
pub mod inference;
pub mod learners;
pub mod linalg;
pub mod rng;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
