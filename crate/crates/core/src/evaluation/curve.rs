use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Class, FeatureId, LinearModel, SparseDataset};
use crate::ranking::FeatureRanking;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurvePoint {
    pub k: usize,
    pub explained: usize,
}

/// How many of the model's positive predictions stay positive when only a
/// ranking's top-k features are kept and everything else is set to zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplanationCurve {
    pub method: String,
    pub points: Vec<CurvePoint>,
    pub baseline_positive_count: usize,
}

impl ExplanationCurve {
    pub fn ks(&self) -> impl Iterator<Item = usize> + '_ {
        self.points.iter().map(|p| p.k)
    }

    pub fn explained_at(&self, k: usize) -> Option<usize> {
        self.points.iter().find(|p| p.k == k).map(|p| p.explained)
    }

    /// Explained count as a fraction of the positive baseline (0 when there
    /// are no positives).
    pub fn fraction(&self, point: &CurvePoint) -> f64 {
        if self.baseline_positive_count == 0 {
            0.0
        } else {
            point.explained as f64 / self.baseline_positive_count as f64
        }
    }
}

/// `1, 2, 5, 10, 20, 50, …` below `num_features`, then `num_features` itself.
pub fn default_k_grid(num_features: usize) -> Vec<usize> {
    let mut ks = Vec::new();
    let mut decade = 1usize;
    'outer: loop {
        for step in [1, 2, 5] {
            let k = step * decade;
            if k >= num_features {
                break 'outer;
            }
            ks.push(k);
        }
        decade = match decade.checked_mul(10) {
            Some(d) => d,
            None => break,
        };
    }
    ks.push(num_features);
    ks
}

/// `ks` must be strictly increasing and no larger than `num_features`.
pub fn validate_ks(ks: &[usize], num_features: usize) -> Result<()> {
    if let Some(w) = ks.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::contract(format!(
            "k values must be strictly increasing, got {} then {}",
            w[0], w[1]
        )));
    }
    if let Some(&last) = ks.last() {
        if last > num_features {
            return Err(Error::contract(format!(
                "k = {last} exceeds the {num_features} available features"
            )));
        }
    }
    Ok(())
}

/// Orders the whole feature space: features the ranking leaves out score 0
/// and slot in under the same rule (score descending, then id ascending), so
/// they follow positive scores and precede negative ones.
fn full_order(ranking: &FeatureRanking, num_features: usize) -> Result<Vec<FeatureId>> {
    let mut score: Vec<Option<f64>> = vec![None; num_features];
    for e in &ranking.entries {
        let slot = score
            .get_mut(e.feature.index())
            .ok_or(Error::FeatureOutOfRange {
                feature: e.feature,
                num_features,
            })?;
        slot.get_or_insert(e.score);
    }
    let mut order: Vec<FeatureId> = (0..num_features as u32).map(FeatureId).collect();
    order.sort_by(|a, b| {
        let sa = score[a.index()].unwrap_or(0.0) + 0.0;
        let sb = score[b.index()].unwrap_or(0.0) + 0.0;
        sb.total_cmp(&sa).then(a.cmp(b))
    });
    Ok(order)
}

/// `k = num_features` always keeps the full feature space, whatever the
/// ranking covers.
pub fn explanation_curve(
    ranking: &FeatureRanking,
    model: &LinearModel,
    dataset: &SparseDataset,
    ks: &[usize],
) -> Result<ExplanationCurve> {
    let num_features = model.num_features();
    validate_ks(ks, num_features)?;
    let order = full_order(ranking, num_features)?;

    let positives: Vec<_> = dataset
        .instances()
        .par_iter()
        .map(|inst| {
            model
                .predict(inst)
                .map(|c| (c == Class::Positive).then_some(inst))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let mut mask = vec![false; num_features];
    let mut included = 0;
    let mut points = Vec::with_capacity(ks.len());
    for &k in ks {
        for f in &order[included..k] {
            mask[f.index()] = true;
        }
        included = k;
        let explained = positives
            .par_iter()
            .map(|inst| {
                model
                    .predict_masked(inst, &mask)
                    .map(|c| c == Class::Positive)
            })
            .collect::<Result<Vec<bool>>>()?
            .into_iter()
            .filter(|&p| p)
            .count();
        points.push(CurvePoint { k, explained });
    }
    Ok(ExplanationCurve {
        method: ranking.method.name().to_string(),
        points,
        baseline_positive_count: positives.len(),
    })
}
