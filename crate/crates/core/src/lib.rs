//! Curvature-augmented force-field manifold embedding.
//!
//! The crate covers the full pipeline: data ingestion and preprocessing,
//! kNN graph construction with negative sampling, centroid edge curvature,
//! the attractive / curvature / repulsive force field, an ADAM optimizer,
//! the five learning modes, an embedding-quality metric suite and the CLI.

// index loops mirror the formulas; `!(x > 0.0)` comparisons also reject NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod curvature;
pub mod dataset;
pub mod error;
pub mod force_field;
pub mod knn;
pub mod learners;
pub mod linalg;
pub mod metrics;
pub mod optimizer;

pub use error::{CamelError, Result};
