//! Dataset-level explanation runs.
//!
//! Instances fan out over the current rayon pool; results come back in
//! dataset order, so output does not depend on the number of threads.
//! Negative predictions and unexplainable instances are skipped.

use rayon::prelude::*;

use crate::ec::{self, Explanation, SearchMethod, DEFAULT_SEARCH_BUDGET};
use crate::error::Result;
use crate::model::{Class, LinearModel, SparseDataset};
use crate::shapley::{self, AttributionVector, ShapleyOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EcOptions {
    pub search: SearchMethod,
    /// Largest subset tried by complete search.
    pub max_size: usize,
    pub budget: u128,
}

impl Default for EcOptions {
    fn default() -> Self {
        EcOptions {
            search: SearchMethod::LinearRank,
            max_size: 3,
            budget: DEFAULT_SEARCH_BUDGET,
        }
    }
}

pub fn explain_dataset(
    model: &LinearModel,
    dataset: &SparseDataset,
    opts: &EcOptions,
) -> Result<Vec<Explanation>> {
    let found: Vec<Option<Explanation>> = dataset
        .instances()
        .par_iter()
        .map(|inst| ec::explain(model, inst, opts.search, opts.max_size, opts.budget))
        .collect::<Result<_>>()?;
    Ok(found.into_iter().flatten().collect())
}

pub fn attribute_dataset(
    model: &LinearModel,
    dataset: &SparseDataset,
    opts: &ShapleyOptions,
) -> Result<Vec<AttributionVector>> {
    let found: Vec<Option<AttributionVector>> = dataset
        .instances()
        .par_iter()
        .map(|inst| {
            if model.predict(inst)? != Class::Positive {
                return Ok(None);
            }
            let game = shapley::build_game(model, inst)?;
            shapley::shapley(&game, opts).map(Some)
        })
        .collect::<Result<_>>()?;
    Ok(found.into_iter().flatten().collect())
}
