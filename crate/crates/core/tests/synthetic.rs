use sparse_explain::evaluation::{generate_synthetic, SynthConfig};
use sparse_explain::model::FeatureId;
use sparse_explain::ranking::rank_by_coverage;

#[test]
fn default_benchmark_has_power_law_coverage() {
    let cfg = SynthConfig::default();
    let (model, ds) = generate_synthetic(&cfg).unwrap();
    assert_eq!((ds.len(), ds.num_features()), (10_000, 5_000));
    assert_eq!(model.num_features(), 5_000);

    let count = |f: u32| {
        ds.instances()
            .iter()
            .filter(|i| i.contains(FeatureId(f)))
            .count()
    };
    assert!(count(0) > count(4999));
    assert!(count(0) > 4_000);

    let coverage = rank_by_coverage(&ds);
    let top: Vec<u32> = coverage.features().take(5).map(|f| f.0).collect();
    assert!(top.iter().all(|&f| f < 20), "{top:?}");

    // the heaviest coefficients sit on rare features
    let mut by_weight: Vec<_> = model.weights().collect();
    by_weight.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (f, _) in by_weight.iter().take(20) {
        assert!(f.index() >= 2_500);
        assert!(count(f.0) < 50, "feature {f} covers {}", count(f.0));
    }

    let positives = ds
        .instances()
        .iter()
        .filter(|i| i.label() == Some(true))
        .count();
    assert_eq!(positives, ds.positive_count(&model).unwrap());
}
