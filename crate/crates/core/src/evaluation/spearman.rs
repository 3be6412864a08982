use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::ranking::{FeatureRanking, RankingMethod};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationReport {
    /// Ranking whose top-k features are compared.
    pub row: RankingMethod,
    pub column: RankingMethod,
    pub top_k: usize,
    pub rho: f64,
}

/// 1-based ranks in ascending order of value; tied values share the mean of
/// the positions they occupy.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        // positions i+1 ..= j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    // equal spreads (always true for untied rank vectors) divide exactly
    let denom = if sxx == syy { sxx } else { (sxx * syy).sqrt() };
    Some((sxy / denom).clamp(-1.0, 1.0))
}

/// Spearman's ρ: Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::contract(format!(
            "paired samples differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "need at least 2 pairs, got {}",
            x.len()
        )));
    }
    pearson(&average_ranks(x), &average_ranks(y))
        .ok_or_else(|| Error::UndefinedCorrelation("one side has no rank variation".into()))
}

/// Correlates the top `top_k` features of `row` with their positions in
/// `column`. A feature `column` does not rank sits at position
/// `column.len() + 1`; such features tie with each other. The result is not
/// symmetric in its arguments.
pub fn spearman_topk(
    row: &FeatureRanking,
    column: &FeatureRanking,
    top_k: usize,
) -> Result<CorrelationReport> {
    if top_k < 2 {
        return Err(Error::contract(format!(
            "top_k must be at least 2, got {top_k}"
        )));
    }
    let positions: HashMap<_, _> = column
        .features()
        .enumerate()
        .map(|(i, f)| (f, i + 1))
        .collect();
    let missing = (column.len() + 1) as f64;

    let mut x = Vec::with_capacity(top_k);
    let mut y = Vec::with_capacity(top_k);
    let mut overlap = 0;
    for (i, f) in row.features().take(top_k).enumerate() {
        x.push((i + 1) as f64);
        match positions.get(&f) {
            Some(&p) => {
                overlap += 1;
                y.push(p as f64);
            }
            None => y.push(missing),
        }
    }
    if overlap < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "only {overlap} of the top {} {} features are ranked by {}",
            x.len(),
            row.method,
            column.method
        )));
    }
    Ok(CorrelationReport {
        row: row.method,
        column: column.method,
        top_k,
        rho: spearman(&x, &y)?,
    })
}
