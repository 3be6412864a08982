//! Linear model over sparse binary features, and the instances it scores.
//!
//! An instance is the set of features whose value is 1. The model score is
//! `intercept + Σ β_j` over the active features that survive an optional mask,
//! and the predicted class is positive iff that score is strictly greater than
//! the model threshold.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use crate::error::{Error, Result};

/// Index into the global feature vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureId(pub u32);

impl FeatureId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for FeatureId {
    fn from(v: u32) -> Self {
        FeatureId(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Class {
    Positive,
    Negative,
}

/// Decides which active features take part in a masked score.
pub trait FeatureMask {
    fn keeps(&self, feature: FeatureId) -> bool;
}

impl FeatureMask for BTreeSet<FeatureId> {
    fn keeps(&self, feature: FeatureId) -> bool {
        self.contains(&feature)
    }
}

impl FeatureMask for HashSet<FeatureId> {
    fn keeps(&self, feature: FeatureId) -> bool {
        self.contains(&feature)
    }
}

/// Dense mask indexed by feature id; ids past the end are dropped.
impl FeatureMask for [bool] {
    fn keeps(&self, feature: FeatureId) -> bool {
        self.get(feature.index()).copied().unwrap_or(false)
    }
}

impl FeatureMask for Vec<bool> {
    fn keeps(&self, feature: FeatureId) -> bool {
        self.as_slice().keeps(feature)
    }
}

/// Keeps everything except the listed features.
pub struct Without<'a>(pub &'a [FeatureId]);

impl FeatureMask for Without<'_> {
    fn keeps(&self, feature: FeatureId) -> bool {
        !self.0.contains(&feature)
    }
}

impl<F> FeatureMask for F
where
    F: Fn(FeatureId) -> bool,
{
    fn keeps(&self, feature: FeatureId) -> bool {
        self(feature)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    weights: BTreeMap<FeatureId, f64>,
    dense: Vec<f64>,
    intercept: f64,
    threshold: f64,
    num_features: usize,
}

impl LinearModel {
    /// Builds a model; features missing from `weights` carry weight 0.
    pub fn new<I>(weights: I, intercept: f64, threshold: f64, num_features: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (FeatureId, f64)>,
    {
        check_finite("intercept", intercept)?;
        check_finite("threshold", threshold)?;
        let mut map = BTreeMap::new();
        for (feature, weight) in weights {
            check_finite(&format!("weight of feature {feature}"), weight)?;
            if feature.index() >= num_features {
                return Err(Error::FeatureOutOfRange {
                    feature,
                    num_features,
                });
            }
            if map.insert(feature, weight).is_some() {
                return Err(Error::DuplicateFeature(feature));
            }
        }
        let mut dense = vec![0.0; num_features];
        for (f, w) in &map {
            dense[f.index()] = *w;
        }
        Ok(LinearModel {
            weights: map,
            dense,
            intercept,
            threshold,
            num_features,
        })
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        check_finite("threshold", threshold)?;
        self.threshold = threshold;
        Ok(self)
    }

    /// Widens the feature space, e.g. to cover a dataset whose vocabulary is
    /// larger than the highest weighted feature.
    pub fn with_num_features(mut self, num_features: usize) -> Result<Self> {
        if let Some((&last, _)) = self.weights.last_key_value() {
            if last.index() >= num_features {
                return Err(Error::FeatureOutOfRange {
                    feature: last,
                    num_features,
                });
            }
        }
        self.dense.resize(num_features, 0.0);
        self.num_features = num_features;
        Ok(self)
    }

    #[inline]
    pub fn weight(&self, feature: FeatureId) -> f64 {
        self.dense.get(feature.index()).copied().unwrap_or(0.0)
    }

    /// Explicitly declared weights in ascending feature order.
    pub fn weights(&self) -> impl Iterator<Item = (FeatureId, f64)> + '_ {
        self.weights.iter().map(|(f, w)| (*f, *w))
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn score(&self, instance: &SparseInstance) -> Result<f64> {
        self.score_masked(instance, &|_| true)
    }

    /// Score with only the active features the mask keeps. Masking a feature
    /// is the same as deleting it from the instance.
    pub fn score_masked<M>(&self, instance: &SparseInstance, mask: &M) -> Result<f64>
    where
        M: FeatureMask + ?Sized,
    {
        let mut total = self.intercept;
        for &f in instance.active() {
            if f.index() >= self.num_features {
                return Err(Error::FeatureOutOfRange {
                    feature: f,
                    num_features: self.num_features,
                });
            }
            if mask.keeps(f) {
                total += self.dense[f.index()];
            }
        }
        Ok(total)
    }

    #[inline]
    pub fn classify(&self, score: f64) -> Class {
        if score > self.threshold {
            Class::Positive
        } else {
            Class::Negative
        }
    }

    pub fn predict(&self, instance: &SparseInstance) -> Result<Class> {
        self.score(instance).map(|s| self.classify(s))
    }

    pub fn predict_masked<M>(&self, instance: &SparseInstance, mask: &M) -> Result<Class>
    where
        M: FeatureMask + ?Sized,
    {
        self.score_masked(instance, mask).map(|s| self.classify(s))
    }

    /// Active features paired with their evidence `β_j · x_ij`, strongest first.
    /// Equal evidence is ordered by ascending feature id.
    pub fn evidence(&self, instance: &SparseInstance) -> Result<Vec<(FeatureId, f64)>> {
        let mut out = Vec::with_capacity(instance.len());
        for &f in instance.active() {
            if f.index() >= self.num_features {
                return Err(Error::FeatureOutOfRange {
                    feature: f,
                    num_features: self.num_features,
                });
            }
            out.push((f, self.dense[f.index()]));
        }
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Ok(out)
    }
}

fn check_finite(what: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite {
            what: what.to_string(),
            value,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseInstance {
    id: u64,
    active: Vec<FeatureId>,
    label: Option<bool>,
}

impl SparseInstance {
    /// Sorts `active`; a repeated feature is an error.
    pub fn new(id: u64, active: impl IntoIterator<Item = FeatureId>) -> Result<Self> {
        let mut active: Vec<FeatureId> = active.into_iter().collect();
        active.sort_unstable();
        if let Some(w) = active.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateFeature(w[0]));
        }
        Ok(SparseInstance {
            id,
            active,
            label: None,
        })
    }

    pub fn with_label(mut self, label: Option<bool>) -> Self {
        self.label = label;
        self
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn active(&self) -> &[FeatureId] {
        &self.active
    }

    pub fn label(&self) -> Option<bool> {
        self.label
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn contains(&self, feature: FeatureId) -> bool {
        self.active.binary_search(&feature).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseDataset {
    instances: Vec<SparseInstance>,
    num_features: usize,
}

impl SparseDataset {
    pub fn new(instances: Vec<SparseInstance>, num_features: usize) -> Result<Self> {
        let mut seen = HashSet::with_capacity(instances.len());
        for inst in &instances {
            if !seen.insert(inst.id()) {
                return Err(Error::DuplicateInstance(inst.id()));
            }
            if let Some(&last) = inst.active().last() {
                if last.index() >= num_features {
                    return Err(Error::FeatureOutOfRange {
                        feature: last,
                        num_features,
                    });
                }
            }
        }
        Ok(SparseDataset {
            instances,
            num_features,
        })
    }

    pub fn instances(&self) -> &[SparseInstance] {
        &self.instances
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Number of instances the model predicts positive.
    pub fn positive_count(&self, model: &LinearModel) -> Result<usize> {
        let mut n = 0;
        for inst in &self.instances {
            if model.predict(inst)? == Class::Positive {
                n += 1;
            }
        }
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: FeatureId = FeatureId(0);
    const B: FeatureId = FeatureId(1);
    const C: FeatureId = FeatureId(2);

    fn inst(features: &[FeatureId]) -> SparseInstance {
        SparseInstance::new(0, features.iter().copied()).unwrap()
    }

    #[test]
    fn score_sums_active_weights() {
        let m = LinearModel::new([(A, 2.0), (B, -1.0)], 0.5, 0.0, 2).unwrap();
        assert_eq!(m.score(&inst(&[A, B])).unwrap(), 1.5);
        assert_eq!(m.score(&inst(&[])).unwrap(), 0.5);
        let mask: BTreeSet<_> = [A].into_iter().collect();
        assert_eq!(m.score_masked(&inst(&[A, B]), &mask).unwrap(), 2.5);
    }

    #[test]
    fn predict_uses_strict_threshold() {
        let m = LinearModel::new([(A, 2.0)], 0.0, 0.5, 1).unwrap();
        assert_eq!(m.predict(&inst(&[A])).unwrap(), Class::Positive);
        assert_eq!(m.predict(&inst(&[])).unwrap(), Class::Negative);

        let m = LinearModel::new([(A, 2.0), (B, -3.0)], 0.0, 0.0, 2).unwrap();
        assert_eq!(m.predict(&inst(&[A, B])).unwrap(), Class::Negative);

        // score == threshold is negative
        let m = LinearModel::new([(A, 1.0)], 0.0, 1.0, 1).unwrap();
        assert_eq!(m.predict(&inst(&[A])).unwrap(), Class::Negative);
    }

    #[test]
    fn evidence_sorted_descending_with_id_ties() {
        let m = LinearModel::new([(A, 0.2), (B, 1.5), (C, -0.3)], 0.0, 0.0, 3).unwrap();
        assert_eq!(
            m.evidence(&inst(&[A, B, C])).unwrap(),
            vec![(B, 1.5), (A, 0.2), (C, -0.3)]
        );
        let m = LinearModel::new([(A, 1.0), (B, 1.0)], 0.0, 0.0, 2).unwrap();
        assert_eq!(
            m.evidence(&inst(&[B, A])).unwrap(),
            vec![(A, 1.0), (B, 1.0)]
        );
        assert!(m.evidence(&inst(&[])).unwrap().is_empty());
    }

    #[test]
    fn unweighted_feature_scores_zero() {
        let m = LinearModel::new([(A, 1.0)], 0.0, 0.0, 3).unwrap();
        assert_eq!(m.score(&inst(&[A, C])).unwrap(), 1.0);
    }

    #[test]
    fn out_of_range_feature_is_an_error() {
        let m = LinearModel::new([(A, 1.0)], 0.0, 0.0, 1).unwrap();
        assert!(matches!(
            m.score(&inst(&[B])),
            Err(Error::FeatureOutOfRange { .. })
        ));
        assert!(m.evidence(&inst(&[B])).is_err());
    }

    #[test]
    fn model_rejects_bad_weights() {
        assert!(LinearModel::new([(A, f64::NAN)], 0.0, 0.0, 1).is_err());
        assert!(LinearModel::new([(B, 1.0)], 0.0, 0.0, 1).is_err());
        assert!(matches!(
            LinearModel::new([(A, 1.0), (A, 2.0)], 0.0, 0.0, 1),
            Err(Error::DuplicateFeature(_))
        ));
        assert!(LinearModel::new([(A, 1.0)], 0.0, f64::INFINITY, 1).is_err());
    }

    #[test]
    fn instance_sorted_and_unique() {
        let i = SparseInstance::new(3, [C, A]).unwrap();
        assert_eq!(i.active(), &[A, C]);
        assert!(SparseInstance::new(3, [A, A]).is_err());
    }

    #[test]
    fn dataset_rejects_duplicate_ids() {
        let a = SparseInstance::new(1, [A]).unwrap();
        assert!(matches!(
            SparseDataset::new(vec![a.clone(), a], 1),
            Err(Error::DuplicateInstance(1))
        ));
    }

    #[test]
    fn widen_feature_space() {
        let m = LinearModel::new([(A, 1.0)], 0.0, 0.0, 1).unwrap();
        let m = m.with_num_features(5).unwrap();
        assert_eq!(m.score(&inst(&[A, FeatureId(4)])).unwrap(), 1.0);
        assert!(m.with_num_features(0).is_err());
    }
}
