//! Ranking evaluation: explanation curves, rank correlation, curve
//! comparison, and a synthetic sparse benchmark generator.

mod curve;
mod report;
mod spearman;
mod synth;

pub use curve::{default_k_grid, explanation_curve, validate_ks, CurvePoint, ExplanationCurve};
pub use report::{curve_report, CurveReport, ReportRow, DOUBLING_RATIO};
pub use spearman::{average_ranks, spearman, spearman_topk, CorrelationReport};
pub use synth::{generate_synthetic, SynthConfig};
