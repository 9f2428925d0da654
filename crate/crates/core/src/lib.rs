//! Autoencoder-regularized sparse logistic regression and a bootstrap
//! harness for measuring feature-selection and weight-estimation stability.
//!
//! The predictor's weight vector is factorized as `θ = Wᵀu`, with `W` the
//! encoder of an autoencoder trained jointly on the same (optionally
//! augmented) data. Lasso, elastic-net and feature-graph baselines share the
//! same optimizer and evaluation path.

pub mod data;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod metrics;
pub mod models;
pub mod objectives;
pub mod optimizer;
pub mod stability;
pub mod synthetic;

pub use error::{Error, Result};
