//! Evidence counterfactual explanations.
//!
//! An explanation of a positive prediction is a set `E` of active features
//! such that deleting `E` makes the model predict negative, and deleting any
//! proper subset of `E` does not. Three searches are provided:
//!
//! * [`explain_linear`] removes features in [`LinearModel::evidence`] order and
//!   stops at the first flip. For a linear model this prefix has minimum size.
//! * [`explain_complete`] enumerates subsets by increasing size in
//!   lexicographic order of feature ids.
//! * [`explain_greedy`] treats the model as a black-box scorer, repeatedly
//!   removing the feature that lowers the score the most, then prunes the
//!   result back to a minimal set.
//!
//! Negative predictions are not explained; every search returns `Ok(None)`
//! for them.

use crate::error::{Error, Result};
use crate::model::{Class, FeatureId, LinearModel, SparseInstance};

/// Default cap on subset evaluations for [`explain_complete`].
pub const DEFAULT_SEARCH_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SearchMethod {
    LinearRank,
    Complete,
    Greedy,
}

impl SearchMethod {
    pub fn name(self) -> &'static str {
        match self {
            SearchMethod::LinearRank => "linear_rank",
            SearchMethod::Complete => "complete",
            SearchMethod::Greedy => "greedy",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub instance_id: u64,
    /// The explaining features, ascending by id.
    pub features: Vec<FeatureId>,
    pub original_class: Class,
    pub flipped_class: Class,
    pub method: SearchMethod,
}

impl Explanation {
    pub fn size(&self) -> usize {
        self.features.len()
    }

    pub fn contains(&self, feature: FeatureId) -> bool {
        self.features.binary_search(&feature).is_ok()
    }

    fn new(instance: &SparseInstance, mut features: Vec<FeatureId>, method: SearchMethod) -> Self {
        features.sort_unstable();
        Explanation {
            instance_id: instance.id(),
            features,
            original_class: Class::Positive,
            flipped_class: Class::Negative,
            method,
        }
    }
}

/// Class of `instance` after deleting the features in `removed` (sorted).
fn class_without(
    model: &LinearModel,
    instance: &SparseInstance,
    removed: &[FeatureId],
) -> Result<Class> {
    model.predict_masked(instance, &|f: FeatureId| removed.binary_search(&f).is_err())
}

fn insert_sorted(set: &mut Vec<FeatureId>, f: FeatureId) {
    if let Err(pos) = set.binary_search(&f) {
        set.insert(pos, f);
    }
}

pub fn explain_linear(
    model: &LinearModel,
    instance: &SparseInstance,
) -> Result<Option<Explanation>> {
    if model.predict(instance)? != Class::Positive {
        return Ok(None);
    }
    let ranked = model.evidence(instance)?;
    let mut removed = Vec::with_capacity(ranked.len());
    for (k, &(f, _)) in ranked.iter().enumerate() {
        insert_sorted(&mut removed, f);
        if class_without(model, instance, &removed)? == Class::Negative {
            let prefix = ranked[..=k].iter().map(|(f, _)| *f).collect();
            return Ok(Some(Explanation::new(
                instance,
                prefix,
                SearchMethod::LinearRank,
            )));
        }
    }
    Ok(None)
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Number of subsets [`explain_complete`] may evaluate, sizes `1..=max_size`.
pub fn complete_search_cost(active: usize, max_size: usize) -> u128 {
    let n = active as u128;
    (1..=max_size.min(active) as u128).fold(0u128, |acc, s| acc.saturating_add(binomial(n, s)))
}

pub fn explain_complete(
    model: &LinearModel,
    instance: &SparseInstance,
    max_size: usize,
) -> Result<Option<Explanation>> {
    explain_complete_with_budget(model, instance, max_size, DEFAULT_SEARCH_BUDGET)
}

/// Exhaustive search by increasing subset size. Within a size, subsets are
/// tried in lexicographic order of their sorted feature ids, so the result is
/// the lexicographically first flipping subset of minimum size.
pub fn explain_complete_with_budget(
    model: &LinearModel,
    instance: &SparseInstance,
    max_size: usize,
    budget: u128,
) -> Result<Option<Explanation>> {
    let n = instance.len();
    let required = complete_search_cost(n, max_size);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    if model.predict(instance)? != Class::Positive {
        return Ok(None);
    }
    let active = instance.active();
    for size in 1..=max_size.min(n) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let subset: Vec<FeatureId> = idx.iter().map(|&i| active[i]).collect();
            if class_without(model, instance, &subset)? == Class::Negative {
                return Ok(Some(Explanation::new(
                    instance,
                    subset,
                    SearchMethod::Complete,
                )));
            }
            if !next_combination(&mut idx, n) {
                break;
            }
        }
    }
    Ok(None)
}

/// Advances `idx` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

pub fn explain_greedy(
    model: &LinearModel,
    instance: &SparseInstance,
) -> Result<Option<Explanation>> {
    if model.predict(instance)? != Class::Positive {
        return Ok(None);
    }
    let mut removed: Vec<FeatureId> = Vec::new();
    let mut order: Vec<FeatureId> = Vec::new();
    let mut current = model.score(instance)?;
    while model.classify(current) == Class::Positive {
        let mut best: Option<(FeatureId, f64)> = None;
        for &f in instance.active() {
            if removed.binary_search(&f).is_ok() {
                continue;
            }
            let mut trial = removed.clone();
            insert_sorted(&mut trial, f);
            let s =
                model.score_masked(instance, &|g: FeatureId| trial.binary_search(&g).is_err())?;
            // strict < keeps the lowest id among equal scores
            if best.is_none_or(|(_, b)| s < b) {
                best = Some((f, s));
            }
        }
        match best {
            Some((f, s)) if s < current => {
                insert_sorted(&mut removed, f);
                order.push(f);
                current = s;
            }
            // nothing left that lowers the score: the class cannot flip
            _ => return Ok(None),
        }
    }

    // Put back any feature whose absence is not needed for the flip.
    let mut kept = removed;
    let mut changed = true;
    while changed {
        changed = false;
        for &f in order.iter().rev() {
            let Ok(pos) = kept.binary_search(&f) else {
                continue;
            };
            let mut trial = kept.clone();
            trial.remove(pos);
            if class_without(model, instance, &trial)? == Class::Negative {
                kept = trial;
                changed = true;
            }
        }
    }
    Ok(Some(Explanation::new(instance, kept, SearchMethod::Greedy)))
}

pub fn explain(
    model: &LinearModel,
    instance: &SparseInstance,
    method: SearchMethod,
    max_size: usize,
    budget: u128,
) -> Result<Option<Explanation>> {
    match method {
        SearchMethod::LinearRank => explain_linear(model, instance),
        SearchMethod::Complete => explain_complete_with_budget(model, instance, max_size, budget),
        SearchMethod::Greedy => explain_greedy(model, instance),
    }
}
