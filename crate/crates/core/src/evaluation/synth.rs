//! Synthetic sparse binary benchmark.
//!
//! Feature `j` is active in an instance with probability proportional to
//! `(j + 1)^-coverage_exponent`, scaled so an instance has `mean_active`
//! features on average. Weights are Gaussian, except that a fraction of the
//! rare features (the upper half of the id range) get a large positive boost:
//! high coefficient, low coverage.
//!
//! Every instance draws from its own seeded stream, so the output is the same
//! for any thread count.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Class, FeatureId, LinearModel, SparseDataset, SparseInstance};
use crate::shapley::instance_seed;

/// Stream id for the weight draws; instance streams use the instance index.
const WEIGHT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub num_instances: usize,
    pub num_features: usize,
    pub coverage_exponent: f64,
    /// Expected number of active features per instance.
    pub mean_active: f64,
    /// Cap on any single feature's activation probability.
    pub max_coverage: f64,
    pub weight_mean: f64,
    pub weight_std: f64,
    /// Fraction of all features that receive the rare-feature boost.
    pub boosted_fraction: f64,
    pub boost: f64,
    pub intercept: f64,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_instances: 10_000,
            num_features: 5_000,
            coverage_exponent: 1.0,
            mean_active: 12.0,
            max_coverage: 0.5,
            weight_mean: 0.3,
            weight_std: 0.5,
            boosted_fraction: 0.05,
            boost: 3.0,
            intercept: -1.0,
            threshold: 0.0,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.num_instances == 0 || self.num_features == 0 {
            return bad("num_instances and num_features must be positive");
        }
        if self.num_features > u32::MAX as usize {
            return bad("num_features does not fit a 32-bit feature id");
        }
        // exponent 0 gives uniform coverage
        if !(self.coverage_exponent >= 0.0 && self.coverage_exponent.is_finite()) {
            return bad("coverage_exponent must be a finite non-negative number");
        }
        if !(self.mean_active > 0.0 && self.mean_active.is_finite()) {
            return bad("mean_active must be positive");
        }
        if !(self.max_coverage > 0.0 && self.max_coverage <= 1.0) {
            return bad("max_coverage must lie in (0, 1]");
        }
        if !(self.weight_std >= 0.0 && self.weight_std.is_finite()) {
            return bad("weight_std must be finite and non-negative");
        }
        if !(0.0..=0.5).contains(&self.boosted_fraction) {
            return bad("boosted_fraction must lie in [0, 0.5]");
        }
        for (name, v) in [
            ("weight_mean", self.weight_mean),
            ("boost", self.boost),
            ("intercept", self.intercept),
            ("threshold", self.threshold),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// Activation probability of each feature.
    pub fn coverage_probabilities(&self) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.num_features)
            .map(|j| ((j + 1) as f64).powf(-self.coverage_exponent))
            .collect();
        let scale = self.mean_active / raw.iter().sum::<f64>();
        raw.into_iter()
            .map(|p| (p * scale).min(self.max_coverage))
            .collect()
    }
}

pub fn generate_synthetic(config: &SynthConfig) -> Result<(LinearModel, SparseDataset)> {
    config.validate()?;
    let m = config.num_features;

    let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(config.seed, WEIGHT_STREAM));
    let normal = Normal::new(config.weight_mean, config.weight_std)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut weights: Vec<f64> = (0..m).map(|_| normal.sample(&mut rng)).collect();
    let rare_start = m / 2;
    let boosted = ((config.boosted_fraction * m as f64).round() as usize).min(m - rare_start);
    for offset in index::sample(&mut rng, m - rare_start, boosted) {
        let w = &mut weights[rare_start + offset];
        *w = w.abs() + config.boost;
    }
    let model = LinearModel::new(
        weights
            .iter()
            .enumerate()
            .map(|(j, &w)| (FeatureId(j as u32), w)),
        config.intercept,
        config.threshold,
        m,
    )?;

    let probs = config.coverage_probabilities();
    let instances: Vec<SparseInstance> = (0..config.num_instances as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(config.seed, i));
            let active = probs
                .iter()
                .enumerate()
                .filter(|(_, &p)| rng.random::<f64>() < p)
                .map(|(j, _)| FeatureId(j as u32));
            SparseInstance::new(i, active)
        })
        .collect::<Result<_>>()?;
    let labelled = instances
        .into_iter()
        .map(|inst| {
            let positive = model.predict(&inst)? == Class::Positive;
            Ok(inst.with_label(Some(positive)))
        })
        .collect::<Result<Vec<_>>>()?;
    let dataset = SparseDataset::new(labelled, m)?;
    Ok((model, dataset))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            num_instances: 300,
            num_features: 200,
            mean_active: 8.0,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let a = generate_synthetic(&small()).unwrap();
        let b = generate_synthetic(&small()).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(&SynthConfig { seed: 7, ..small() }).unwrap();
        assert_ne!(a.1, c.1);
    }

    #[test]
    fn zero_exponent_is_uniform() {
        let cfg = SynthConfig {
            coverage_exponent: 0.0,
            ..small()
        };
        let p = cfg.coverage_probabilities();
        assert!(p.iter().all(|&x| (x - p[0]).abs() < 1e-15));
        assert!((p[0] - 8.0 / 200.0).abs() < 1e-12);
    }

    #[test]
    fn coverage_decays_with_id() {
        let p = small().coverage_probabilities();
        assert!(p.windows(2).all(|w| w[0] >= w[1]));
        let total: f64 = SynthConfig::default().coverage_probabilities().iter().sum();
        assert!(total <= 12.0 + 1e-9);
    }

    #[test]
    fn boosted_features_are_rare_and_heavy() {
        let (model, _) = generate_synthetic(&small()).unwrap();
        let cfg = small();
        let heavy = model
            .weights()
            .filter(|&(_, w)| w >= cfg.boost)
            .collect::<Vec<_>>();
        assert!(heavy.len() >= 10);
        let in_rare_half = heavy.iter().filter(|(f, _)| f.index() >= 100).count();
        assert!(in_rare_half >= 10);
    }

    #[test]
    fn invalid_configs() {
        for cfg in [
            SynthConfig {
                num_instances: 0,
                ..small()
            },
            SynthConfig {
                coverage_exponent: -1.0,
                ..small()
            },
            SynthConfig {
                mean_active: 0.0,
                ..small()
            },
            SynthConfig {
                max_coverage: 1.5,
                ..small()
            },
            SynthConfig {
                boosted_fraction: 0.9,
                ..small()
            },
            SynthConfig {
                weight_std: f64::NAN,
                ..small()
            },
        ] {
            assert!(matches!(
                generate_synthetic(&cfg),
                Err(Error::InvalidConfig(_))
            ));
        }
    }
}
