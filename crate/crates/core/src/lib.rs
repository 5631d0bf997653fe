//! Diversity post-processing for top-k recommendation lists and the user
//! disparity it introduces.
//!
//! The pipeline is: parse MovieLens ratings ([`dataset`]), predict scores
//! for unseen items with a CF model ([`predictors`]), rank and re-rank
//! ([`reranking`]), then measure aggregate diversity, Score Disparity and
//! Recommendation Disparity ([`metrics`]). [`sweep`] drives parameter grids
//! and writes result tables and scatter data.

pub mod dataset;
pub mod error;
pub mod metrics;
pub mod predictors;
pub mod reranking;
pub mod sweep;

pub use error::{Error, Result};
