//! Joint multi-view unsupervised feature selection and graph learning.
//!
//! Given `V` views of the same `n` samples, [`model::Jmvfg`] learns one
//! row-sparse projection `W` per view together with a unified, row-stochastic
//! similarity graph `S` by alternating minimization. Feature rows of `W` are
//! ranked by squared norm for feature selection, and `S` is handed to
//! [`clustering::spectral_cluster`] for clustering.
//!
//! Data matrices are stored features × samples throughout.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod affinity;
pub mod cli;
pub mod clustering;
pub mod data;
pub mod error;
pub mod metrics;
pub mod model;
pub mod numopt;

pub use affinity::{AffinityGraph, AffinityMode};
pub use clustering::ClusterAssignment;
pub use data::MultiViewDataset;
pub use error::{Error, Result};
pub use model::{FitResult, Hyperparams, Jmvfg, ModelState, RunTrace};

pub use nalgebra::{DMatrix, DVector};
