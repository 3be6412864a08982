//! Text formats for models, datasets and feature names.
//!
//! Model (tab-separated), one weight per line, `__intercept__` reserved:
//!
//! ```text
//! __intercept__    0.5
//! 0                2
//! 1                -1
//! ```
//!
//! Dataset (SVMLight style, binary values only), instance ids count data lines:
//!
//! ```text
//! 1 0:1 7:1
//! 0 2:1
//! ```
//!
//! Blank lines and lines starting with `#` are ignored in every format.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{FeatureId, LinearModel, SparseDataset, SparseInstance};

pub const INTERCEPT_TOKEN: &str = "__intercept__";

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Yields `(1-based line number, trimmed content)` for non-comment lines.
fn data_lines<'a, R: BufRead + 'a>(
    reader: R,
    path: &'a Path,
) -> impl Iterator<Item = Result<(usize, String)>> + 'a {
    reader
        .lines()
        .enumerate()
        .filter_map(move |(i, line)| match line {
            Err(e) => Some(Err(Error::io(path, e))),
            Ok(l) => {
                let t = l.trim();
                if t.is_empty() || t.starts_with('#') {
                    None
                } else {
                    Some(Ok((i + 1, t.to_string())))
                }
            }
        })
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_feature_id(tok: &str, path: &Path, line: usize) -> Result<FeatureId> {
    tok.parse::<u32>()
        .map(FeatureId)
        .map_err(|_| parse_err(path, line, format!("invalid feature id `{tok}`")))
}

/// Parses a model. The feature space spans `0..=max id`; the threshold is set
/// by the caller.
pub fn read_model<R: Read>(reader: R, path: &Path, threshold: f64) -> Result<LinearModel> {
    let mut weights: BTreeMap<FeatureId, f64> = BTreeMap::new();
    let mut intercept: Option<f64> = None;
    for item in data_lines(BufReader::new(reader), path) {
        let (line, text) = item?;
        let mut cols = text.split('\t');
        let (Some(key), Some(value), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(parse_err(path, line, "expected `feature_id<TAB>weight`"));
        };
        let (key, value) = (key.trim(), value.trim());
        let w: f64 = value
            .parse()
            .map_err(|_| parse_err(path, line, format!("invalid weight `{value}`")))?;
        if !w.is_finite() {
            return Err(parse_err(
                path,
                line,
                format!("non-finite weight `{value}`"),
            ));
        }
        if key == INTERCEPT_TOKEN {
            if intercept.replace(w).is_some() {
                return Err(parse_err(path, line, "intercept given twice"));
            }
            continue;
        }
        let f = parse_feature_id(key, path, line)?;
        if weights.insert(f, w).is_some() {
            return Err(Error::DuplicateFeature(f));
        }
    }
    let num_features = weights.keys().next_back().map_or(0, |f| f.index() + 1);
    LinearModel::new(weights, intercept.unwrap_or(0.0), threshold, num_features)
}

pub fn load_model(path: impl AsRef<Path>, threshold: f64) -> Result<LinearModel> {
    let path = path.as_ref();
    read_model(open(path)?, path, threshold)
}

pub fn write_model<W: Write>(model: &LinearModel, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{INTERCEPT_TOKEN}\t{}", model.intercept())?;
    for (f, w) in model.weights() {
        writeln!(out, "{f}\t{w}")?;
    }
    Ok(())
}

fn parse_label(tok: &str) -> Option<bool> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(|v| v > 0.0)
}

pub fn read_dataset<R: Read>(reader: R, path: &Path) -> Result<SparseDataset> {
    let mut instances = Vec::new();
    let mut num_features = 0usize;
    for item in data_lines(BufReader::new(reader), path) {
        let (line, text) = item?;
        let body = text.split('#').next().unwrap_or_default();
        let mut tokens = body.split_whitespace();
        let label_tok = tokens
            .next()
            .ok_or_else(|| parse_err(path, line, "missing label"))?;
        let label = parse_label(label_tok)
            .ok_or_else(|| parse_err(path, line, format!("invalid label `{label_tok}`")))?;
        let mut active = Vec::new();
        let mut prev: Option<FeatureId> = None;
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| {
                parse_err(path, line, format!("expected `index:value`, got `{tok}`"))
            })?;
            let f = parse_feature_id(idx, path, line)?;
            let v: f64 = val
                .parse()
                .map_err(|_| parse_err(path, line, format!("invalid value `{val}`")))?;
            if v != 1.0 {
                return Err(Error::BinaryViolation {
                    path: path.to_path_buf(),
                    line,
                    feature: f.0 as u64,
                    value: val.to_string(),
                });
            }
            if prev.is_some_and(|p| p >= f) {
                return Err(parse_err(
                    path,
                    line,
                    format!(
                        "feature indices must be strictly increasing, {f} follows {}",
                        prev.unwrap()
                    ),
                ));
            }
            prev = Some(f);
            num_features = num_features.max(f.index() + 1);
            active.push(f);
        }
        let id = instances.len() as u64;
        instances.push(SparseInstance::new(id, active)?.with_label(Some(label)));
    }
    SparseDataset::new(instances, num_features)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<SparseDataset> {
    let path = path.as_ref();
    read_dataset(open(path)?, path)
}

/// Unlabelled instances are written with label 0.
pub fn write_dataset<W: Write>(dataset: &SparseDataset, mut out: W) -> std::io::Result<()> {
    for inst in dataset.instances() {
        let label = if inst.label() == Some(true) { 1 } else { 0 };
        write!(out, "{label}")?;
        for f in inst.active() {
            write!(out, " {f}:1")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Sidecar mapping feature ids to display names: `feature_id<TAB>name`.
pub fn load_feature_names(path: impl AsRef<Path>) -> Result<BTreeMap<FeatureId, String>> {
    let path = path.as_ref();
    let mut names = BTreeMap::new();
    for item in data_lines(open(path)?, path) {
        let (line, text) = item?;
        let (id, name) = text
            .split_once('\t')
            .ok_or_else(|| parse_err(path, line, "expected `feature_id<TAB>name`"))?;
        let f = parse_feature_id(id.trim(), path, line)?;
        if names.insert(f, name.trim().to_string()).is_some() {
            return Err(Error::DuplicateFeature(f));
        }
    }
    Ok(names)
}
