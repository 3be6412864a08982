//! Explanations for linear classifiers over high-dimensional sparse binary
//! data.
//!
//! Instance-level explanations come in two flavours: evidence counterfactuals
//! ([`ec`]), the smallest sets of active features whose removal flips a
//! positive prediction, and Shapley values of a weighted voting game played by
//! the active features ([`shapley`]). [`ranking`] aggregates either into a
//! global feature ranking, and [`evaluation`] measures rankings with
//! explanation curves and rank correlations.

pub mod batch;
pub mod cli;
pub mod ec;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod model;
pub mod ranking;
pub mod shapley;

pub use error::{Error, Result};
pub use model::{Class, FeatureId, FeatureMask, LinearModel, SparseDataset, SparseInstance};
