//! Anomaly detection by classifying random affine transformations of tabular
//! data, with distance-to-center (open-set) transformation probabilities.
//!
//! A detector is trained on normal rows only. Each row is mapped through `M`
//! random affine transformations; a small network learns features in which
//! the transformed copies cluster around one center per transformation. At
//! test time a row whose transformed copies cannot be told apart gets a high
//! score.
//!
//! This crate is `no_std` (it needs `alloc`) and holds everything that is pure
//! computation: linear algebra, the network and optimiser, the task bank, the
//! detector, tabular encoding and splitting, metrics and the LOF baseline. IO,
//! file formats and the command line live in the `goad` crate.
#![no_std]

extern crate alloc;

pub mod adam;
pub mod centers;
pub mod dataset;
mod error;
pub mod lof;
pub mod loss;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod numeric;
pub mod reference;
pub mod scoring;
pub mod seed;
pub mod task_bank;
pub mod train;

pub use centers::{compute_centers, Centers};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use model::{CenterMode, GoadModel, ScoreMode, TrainConfig};
pub use nn::{Activation, DenseLayer, FeatureNet, NetSpec};
pub use scoring::{anomaly_score, closed_set_score, score_batch, transform_log_probs};
pub use task_bank::{sample_bank, BankSpec, TaskBank, TransformFamily};
pub use train::train;
