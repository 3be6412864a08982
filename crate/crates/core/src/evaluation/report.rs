use crate::error::{Error, Result};

use super::curve::ExplanationCurve;

/// Ratio against the β curve at which a method is flagged.
pub const DOUBLING_RATIO: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub k: usize,
    /// Explained count of each curve divided by the β curve's, in the order of
    /// [`CurveReport::methods`]. `inf` when β explains nothing and the method
    /// explains something; 1 when both explain nothing.
    pub ratios: Vec<f64>,
    /// Per method: an EC or Shapley curve at least doubles β at this k.
    pub doubled: Vec<bool>,
}

impl ReportRow {
    pub fn flagged(&self) -> bool {
        self.doubled.iter().any(|&d| d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveReport {
    pub methods: Vec<String>,
    pub rows: Vec<ReportRow>,
}

impl CurveReport {
    fn column(&self, method: &str) -> Option<usize> {
        self.methods.iter().position(|m| m == method)
    }

    pub fn ratio(&self, method: &str, k: usize) -> Option<f64> {
        let c = self.column(method)?;
        self.rows.iter().find(|r| r.k == k).map(|r| r.ratios[c])
    }

    /// Row at the middle of the k grid (lower middle for even-length grids).
    pub fn median_row(&self) -> Option<&ReportRow> {
        if self.rows.is_empty() {
            None
        } else {
            self.rows.get((self.rows.len() - 1) / 2)
        }
    }
}

fn ratio(explained: usize, beta: usize) -> f64 {
    match (explained, beta) {
        (0, 0) => 1.0,
        (_, 0) => f64::INFINITY,
        (e, b) => e as f64 / b as f64,
    }
}

/// Compares curves over a shared k grid against the curve named `beta`.
pub fn curve_report(curves: &[ExplanationCurve]) -> Result<CurveReport> {
    let beta = curves
        .iter()
        .find(|c| c.method == "beta")
        .ok_or_else(|| Error::contract("curve report needs a beta curve"))?;
    let ks: Vec<usize> = beta.ks().collect();
    for c in curves {
        if !c.ks().eq(ks.iter().copied()) {
            return Err(Error::contract(format!(
                "curve `{}` uses a different k grid than `beta`",
                c.method
            )));
        }
        if c.baseline_positive_count != beta.baseline_positive_count {
            return Err(Error::contract(format!(
                "curve `{}` was computed on a different dataset than `beta`",
                c.method
            )));
        }
    }
    let rows = ks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let b = beta.points[i].explained;
            let ratios: Vec<f64> = curves
                .iter()
                .map(|c| ratio(c.points[i].explained, b))
                .collect();
            let doubled = curves
                .iter()
                .zip(&ratios)
                .map(|(c, &r)| matches!(c.method.as_str(), "ec" | "shapley") && r >= DOUBLING_RATIO)
                .collect();
            ReportRow { k, ratios, doubled }
        })
        .collect();
    Ok(CurveReport {
        methods: curves.iter().map(|c| c.method.clone()).collect(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::CurvePoint;

    fn curve(method: &str, explained: &[usize]) -> ExplanationCurve {
        ExplanationCurve {
            method: method.into(),
            points: explained
                .iter()
                .enumerate()
                .map(|(i, &e)| CurvePoint {
                    k: i + 1,
                    explained: e,
                })
                .collect(),
            baseline_positive_count: 10,
        }
    }

    #[test]
    fn identical_curves_have_unit_ratios() {
        let r = curve_report(&[curve("beta", &[0, 3, 10]), curve("ec", &[0, 3, 10])]).unwrap();
        for row in &r.rows {
            assert_eq!(row.ratios, vec![1.0, 1.0]);
            assert!(!row.flagged());
        }
    }

    #[test]
    fn zero_beta_gives_infinite_ratio() {
        let r = curve_report(&[curve("beta", &[0, 2]), curve("shapley", &[3, 4])]).unwrap();
        assert_eq!(r.ratio("shapley", 1), Some(f64::INFINITY));
        assert!(r.rows[0].flagged());
        assert_eq!(r.ratio("shapley", 2), Some(2.0));
        assert!(r.rows[1].doubled[1]);
    }

    #[test]
    fn coverage_is_never_flagged() {
        let r = curve_report(&[curve("beta", &[1]), curve("coverage", &[5])]).unwrap();
        assert!(!r.rows[0].flagged());
    }

    #[test]
    fn mismatched_grids_rejected() {
        let mut ec = curve("ec", &[1, 2]);
        ec.points[1].k = 5;
        assert!(matches!(
            curve_report(&[curve("beta", &[1, 2]), ec]),
            Err(Error::Contract(_))
        ));
        assert!(curve_report(&[curve("ec", &[1])]).is_err());
    }

    #[test]
    fn median_row_is_lower_middle() {
        let r = curve_report(&[curve("beta", &[1, 2, 3, 4])]).unwrap();
        assert_eq!(r.median_row().unwrap().k, 2);
    }
}
