//! Benchmarking toolkit for imbalanced binary classification on categorical
//! survey tables.
//!
//! The crate covers the whole modelling workflow:
//!
//! - [`ingest`]: schema-driven CSV loading, imputation, encoding, stratified splits.
//! - [`select`]: chi-square, mutual information, point-biserial and Boruta
//!   feature screening with a multi-method consensus.
//! - [`balance`]: SMOTE oversampling of training folds.
//! - [`learners`]: nine classifiers behind the [`learners::Classifier`] trait.
//! - [`eval`]: metrics, ROC/PR curves, repeated stratified CV and grid search.
//! - [`epi`]: contingency tables, crude and adjusted odds ratios.
//! - [`synth`]: synthetic survey generator with a known logistic truth.

pub mod balance;
pub mod epi;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod learners;
pub mod matrix;
pub mod rng;
pub mod select;
pub mod synth;

pub use error::{Error, Result};
pub use matrix::Matrix;
