//! Global feature rankings.
//!
//! Instance-level EC and Shapley scores are summed per feature over all
//! explained instances and divided by the grand total, so a feature's global
//! importance reflects both its weight and how often it is active. The β and
//! coverage rankings are the baselines the aggregated rankings are compared
//! against.

use std::fmt;
use std::str::FromStr;

use crate::ec::Explanation;
use crate::error::{Error, Result};
use crate::model::{FeatureId, LinearModel, SparseDataset};
use crate::shapley::AttributionVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RankingMethod {
    Ec,
    Shapley,
    Beta,
    Coverage,
}

impl RankingMethod {
    pub const ALL: [RankingMethod; 4] = [
        RankingMethod::Shapley,
        RankingMethod::Ec,
        RankingMethod::Beta,
        RankingMethod::Coverage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RankingMethod::Ec => "ec",
            RankingMethod::Shapley => "shapley",
            RankingMethod::Beta => "beta",
            RankingMethod::Coverage => "coverage",
        }
    }
}

impl fmt::Display for RankingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RankingMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "ec" => Ok(RankingMethod::Ec),
            "shapley" => Ok(RankingMethod::Shapley),
            "beta" => Ok(RankingMethod::Beta),
            "coverage" => Ok(RankingMethod::Coverage),
            other => Err(format!(
                "unknown ranking method `{other}` (expected ec, shapley, beta or coverage)"
            )),
        }
    }
}

/// Per-instance credit an EC explanation gives each of its features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EcCredit {
    /// 1 for every member of the explanation.
    #[default]
    Membership,
    /// `1 / |E|`, so every explained instance carries the same total credit.
    InverseSize,
}

impl EcCredit {
    pub fn name(self) -> &'static str {
        match self {
            EcCredit::Membership => "membership",
            EcCredit::InverseSize => "inverse_size",
        }
    }

    pub fn credit(self, explanation_size: usize) -> f64 {
        match self {
            EcCredit::Membership => 1.0,
            EcCredit::InverseSize => 1.0 / explanation_size as f64,
        }
    }
}

impl FromStr for EcCredit {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "membership" => Ok(EcCredit::Membership),
            "inverse_size" => Ok(EcCredit::InverseSize),
            other => Err(format!(
                "unknown EC credit mode `{other}` (expected membership or inverse_size)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankEntry {
    pub feature: FeatureId,
    /// Normalized score; for β this is the raw coefficient.
    pub score: f64,
    pub raw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    pub method: RankingMethod,
    pub entries: Vec<RankEntry>,
    /// Normalizer: total EC credit, signed Shapley total, total coverage, or
    /// `Σ max(β, 0)` for the β ranking.
    pub raw_total: f64,
}

impl FeatureRanking {
    fn from_scores(method: RankingMethod, mut entries: Vec<RankEntry>, raw_total: f64) -> Self {
        entries.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.feature.cmp(&b.feature)));
        FeatureRanking {
            method,
            entries,
            raw_total,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn features(&self) -> impl Iterator<Item = FeatureId> + '_ {
        self.entries.iter().map(|e| e.feature)
    }

    /// 1-based position of `feature`, if ranked.
    pub fn position(&self, feature: FeatureId) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| e.feature == feature)
            .map(|p| p + 1)
    }
}

fn normalized(raw: &[f64], present: &[bool], total: f64) -> Vec<RankEntry> {
    raw.iter()
        .zip(present)
        .enumerate()
        .filter(|(_, (_, &p))| p)
        .map(|(i, (&r, _))| RankEntry {
            feature: FeatureId(i as u32),
            score: r / total,
            raw: r,
        })
        .collect()
}

fn check_range(feature: FeatureId, num_features: usize) -> Result<()> {
    if feature.index() >= num_features {
        Err(Error::FeatureOutOfRange {
            feature,
            num_features,
        })
    } else {
        Ok(())
    }
}

pub fn aggregate_ec(
    explanations: &[Explanation],
    num_features: usize,
    credit: EcCredit,
) -> Result<FeatureRanking> {
    // fixed fold order keeps float sums independent of input order
    let mut sorted: Vec<&Explanation> = explanations.iter().collect();
    sorted.sort_by_key(|e| e.instance_id);

    let mut raw = vec![0.0; num_features];
    let mut present = vec![false; num_features];
    for e in sorted {
        if e.features.is_empty() {
            continue;
        }
        let c = credit.credit(e.size());
        for &f in &e.features {
            check_range(f, num_features)?;
            raw[f.index()] += c;
            present[f.index()] = true;
        }
    }
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        return Ok(FeatureRanking::from_scores(
            RankingMethod::Ec,
            Vec::new(),
            0.0,
        ));
    }
    let entries = normalized(&raw, &present, total);
    Ok(FeatureRanking::from_scores(
        RankingMethod::Ec,
        entries,
        total,
    ))
}

/// Sums Shapley values per feature and divides by the signed grand total.
/// Every feature that was a player in some game is ranked, including ones
/// whose total is zero or negative.
pub fn aggregate_shapley(
    attributions: &[AttributionVector],
    num_features: usize,
) -> Result<FeatureRanking> {
    if attributions.is_empty() {
        return Ok(FeatureRanking::from_scores(
            RankingMethod::Shapley,
            Vec::new(),
            0.0,
        ));
    }
    let mut sorted: Vec<&AttributionVector> = attributions.iter().collect();
    sorted.sort_by_key(|a| a.instance_id);

    let mut raw = vec![0.0; num_features];
    let mut present = vec![false; num_features];
    for a in sorted {
        for &(f, phi) in &a.values {
            check_range(f, num_features)?;
            raw[f.index()] += phi;
            present[f.index()] = true;
        }
    }
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        return Err(Error::DegenerateNormalization);
    }
    let entries = normalized(&raw, &present, total);
    Ok(FeatureRanking::from_scores(
        RankingMethod::Shapley,
        entries,
        total,
    ))
}

/// Every feature of the model's space ordered by coefficient; scores are the
/// raw coefficients.
pub fn rank_by_beta(model: &LinearModel) -> FeatureRanking {
    let entries: Vec<RankEntry> = (0..model.num_features())
        .map(|i| {
            let f = FeatureId(i as u32);
            let w = model.weight(f);
            RankEntry {
                feature: f,
                score: w,
                raw: w,
            }
        })
        .collect();
    let positive_total = entries.iter().map(|e| e.raw.max(0.0)).sum();
    FeatureRanking::from_scores(RankingMethod::Beta, entries, positive_total)
}

pub fn rank_by_coverage(dataset: &SparseDataset) -> FeatureRanking {
    let n = dataset.num_features();
    let mut raw = vec![0.0; n];
    let mut present = vec![false; n];
    for inst in dataset.instances() {
        for &f in inst.active() {
            raw[f.index()] += 1.0;
            present[f.index()] = true;
        }
    }
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        return FeatureRanking::from_scores(RankingMethod::Coverage, Vec::new(), 0.0);
    }
    let entries = normalized(&raw, &present, total);
    FeatureRanking::from_scores(RankingMethod::Coverage, entries, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ec::SearchMethod;
    use crate::model::{Class, SparseInstance};
    use crate::shapley::ShapleyMethod;

    const A: FeatureId = FeatureId(0);
    const B: FeatureId = FeatureId(1);
    const C: FeatureId = FeatureId(2);

    fn expl(id: u64, features: &[FeatureId]) -> Explanation {
        Explanation {
            instance_id: id,
            features: features.to_vec(),
            original_class: Class::Positive,
            flipped_class: Class::Negative,
            method: SearchMethod::LinearRank,
        }
    }

    fn attr(id: u64, values: &[(FeatureId, f64)]) -> AttributionVector {
        AttributionVector {
            instance_id: id,
            values: values.to_vec(),
            method: ShapleyMethod::Exact,
            samples: 0,
            seed: 0,
        }
    }

    fn order(r: &FeatureRanking) -> Vec<FeatureId> {
        r.features().collect()
    }

    #[test]
    fn ec_membership_counts() {
        let r = aggregate_ec(&[expl(0, &[A, B]), expl(1, &[A])], 3, EcCredit::Membership).unwrap();
        assert_eq!(order(&r), vec![A, B]);
        assert!((r.entries[0].score - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.entries[1].score - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.entries[0].raw, 2.0);
    }

    #[test]
    fn ec_empty_and_ties() {
        assert!(aggregate_ec(&[], 3, EcCredit::Membership)
            .unwrap()
            .is_empty());
        let r = aggregate_ec(
            &[expl(0, &[C]), expl(1, &[B]), expl(2, &[A])],
            3,
            EcCredit::Membership,
        )
        .unwrap();
        assert_eq!(order(&r), vec![A, B, C]);
        for e in &r.entries {
            assert!((e.score - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ec_inverse_size_credit() {
        let r = aggregate_ec(&[expl(0, &[A, B]), expl(1, &[B])], 2, EcCredit::InverseSize).unwrap();
        assert_eq!(order(&r), vec![B, A]);
        assert!((r.entries[0].score - 0.75).abs() < 1e-12);
    }

    #[test]
    fn shapley_sums_and_normalizes() {
        let r =
            aggregate_shapley(&[attr(0, &[(A, 1.0)]), attr(1, &[(A, 0.5), (B, 0.5)])], 2).unwrap();
        assert_eq!(order(&r), vec![A, B]);
        assert!((r.entries[0].score - 0.75).abs() < 1e-12);
        assert!((r.entries[1].score - 0.25).abs() < 1e-12);

        let one = aggregate_shapley(
            &[attr(0, &[(A, 2.0 / 3.0), (B, 1.0 / 6.0), (C, 1.0 / 6.0)])],
            3,
        )
        .unwrap();
        assert!((one.entries[0].score - 2.0 / 3.0).abs() < 1e-12);
        assert!((one.entries[1].score - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn shapley_all_zero_is_degenerate() {
        let err = aggregate_shapley(&[attr(0, &[(A, 0.0), (B, 0.0)])], 2).unwrap_err();
        assert!(matches!(err, Error::DegenerateNormalization));
    }

    #[test]
    fn shapley_keeps_negative_scores() {
        let r = aggregate_shapley(&[attr(0, &[(A, 1.5), (B, -0.5)])], 2).unwrap();
        assert_eq!(order(&r), vec![A, B]);
        assert!((r.entries[1].score + 0.5).abs() < 1e-12);
    }

    #[test]
    fn beta_orders_by_coefficient() {
        let m = LinearModel::new([(A, 0.2), (B, 1.5)], 0.0, 0.0, 2).unwrap();
        assert_eq!(order(&rank_by_beta(&m)), vec![B, A]);

        let m = LinearModel::new([(A, 1.0), (B, 1.0)], 0.0, 0.0, 2).unwrap();
        assert_eq!(order(&rank_by_beta(&m)), vec![A, B]);

        let m = LinearModel::new([(A, -1.0), (C, 2.0)], 0.0, 0.0, 3).unwrap();
        let r = rank_by_beta(&m);
        assert_eq!(order(&r), vec![C, B, A]);
        assert_eq!(r.raw_total, 2.0);
    }

    #[test]
    fn coverage_counts_instances() {
        let ds = SparseDataset::new(
            vec![
                SparseInstance::new(0, [A, B]).unwrap(),
                SparseInstance::new(1, [A]).unwrap(),
                SparseInstance::new(2, [C]).unwrap(),
            ],
            3,
        )
        .unwrap();
        let r = rank_by_coverage(&ds);
        assert_eq!(order(&r), vec![A, B, C]);
        assert_eq!(r.entries[0].raw, 2.0);
        assert!((r.entries[0].score - 0.5).abs() < 1e-12);

        let empty = SparseDataset::new(vec![], 3).unwrap();
        assert!(rank_by_coverage(&empty).is_empty());
    }

    #[test]
    fn method_names_parse() {
        for m in RankingMethod::ALL {
            assert_eq!(m.name().parse::<RankingMethod>().unwrap(), m);
        }
        assert!("lime".parse::<RankingMethod>().is_err());
    }
}
