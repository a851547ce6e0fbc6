//! Color/shape/texture (COST) dictionary features fused with a task classifier.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`synthgen`]: synthetic color and shape datasets, texture ingestion, resampling.
//! - [`sparse_dict`]: stagewise sparse coding and dictionary learning.
//! - [`cost_space`]: class centroids and the centroid-distance feature vector.
//! - [`mlp`]: the two-hidden-layer softmax classifier.
//! - [`backend`]: the task-dependent classifier contract, a reference model, and
//!   precomputed score tables.
//! - [`fusion`]: score fusion, ROC/GAR@FAR and CMC evaluation.
//! - [`pipeline`]: configuration, stages and run manifests.

pub mod backend;
pub mod cost_space;
pub mod error;
pub mod fusion;
pub mod mlp;
pub mod pipeline;
pub mod seed;
pub mod sparse_dict;
pub mod synthgen;

pub use error::{Error, Result};
