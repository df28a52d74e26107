//! Causal fairness-adjusted predictors for tabular decisions.
//!
//! A decision `Y` depends on sensitive columns `S` and on attributes `A`
//! that are themselves influenced by `S`. From one fitted logistic decision
//! model this crate derives an equal-opportunity predictor, which removes the
//! direct path `S → Y`, and an affirmative-action predictor, which also
//! removes the shift `S → A` on correctable columns. Two baselines, metrics,
//! a synthetic admissions simulator and a command-line harness are included.

pub mod cli;
pub mod domain;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod ingest;
pub mod metrics;
pub mod persist;
pub mod predictors;
pub mod scm_sim;

pub use error::{Error, Result};
