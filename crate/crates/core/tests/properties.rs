//! Randomized properties of scoring, explanations, attribution and I/O.

use std::collections::BTreeSet;
use std::path::Path;

use proptest::prelude::*;

use sparse_explain::ec::explain_linear;
use sparse_explain::evaluation::spearman_topk;
use sparse_explain::io::{read_dataset, read_model, write_dataset, write_model};
use sparse_explain::model::{
    Class, FeatureId, LinearModel, SparseDataset, SparseInstance, Without,
};
use sparse_explain::ranking::{
    aggregate_ec, aggregate_shapley, rank_by_beta, rank_by_coverage, EcCredit,
};
use sparse_explain::shapley::{build_game, exact_shapley, AttributionVector, VotingGame};

const M: usize = 24;

fn model_strategy() -> impl Strategy<Value = LinearModel> {
    (
        prop::collection::vec(-3.0f64..4.0, M),
        -3.0f64..1.0,
        -1.0f64..1.0,
    )
        .prop_map(|(w, b, q)| {
            LinearModel::new(
                w.into_iter()
                    .enumerate()
                    .map(|(i, x)| (FeatureId(i as u32), x)),
                b,
                q,
                M,
            )
            .unwrap()
        })
}

fn active_strategy(max: usize) -> impl Strategy<Value = BTreeSet<u32>> {
    prop::collection::btree_set(0..M as u32, 0..=max)
}

fn instance(id: u64, active: &BTreeSet<u32>) -> SparseInstance {
    SparseInstance::new(id, active.iter().copied().map(FeatureId)).unwrap()
}

fn dataset_strategy() -> impl Strategy<Value = SparseDataset> {
    prop::collection::vec((active_strategy(10), any::<bool>()), 1..30).prop_map(|rows| {
        let instances = rows
            .iter()
            .enumerate()
            .map(|(i, (a, label))| instance(i as u64, a).with_label(Some(*label)))
            .collect();
        SparseDataset::new(instances, M).unwrap()
    })
}

proptest! {
    #[test]
    fn score_is_intercept_plus_active_weights(model in model_strategy(), active in active_strategy(M)) {
        let inst = instance(0, &active);
        let expected = active
            .iter()
            .fold(model.intercept(), |acc, &j| acc + model.weight(FeatureId(j)));
        prop_assert_eq!(model.score(&inst).unwrap(), expected);
        prop_assert_eq!(model.score_masked(&inst, &Without(&[])).unwrap(), expected);
        prop_assert_eq!(model.score_masked(&inst, &|_: FeatureId| false).unwrap(), model.intercept());
    }

    #[test]
    fn evidence_is_a_sorted_permutation(model in model_strategy(), active in active_strategy(M)) {
        let inst = instance(0, &active);
        let ev = model.evidence(&inst).unwrap();
        let ids: BTreeSet<u32> = ev.iter().map(|(f, _)| f.0).collect();
        prop_assert_eq!(ids, active);
        prop_assert!(ev.windows(2).all(|p| p[0].1 > p[1].1 || (p[0].1 == p[1].1 && p[0].0 < p[1].0)));
    }

    #[test]
    fn linear_explanation_is_an_evidence_prefix(model in model_strategy(), active in active_strategy(16)) {
        let inst = instance(0, &active);
        let Some(e) = explain_linear(&model, &inst).unwrap() else {
            return Ok(());
        };
        let prefix: BTreeSet<FeatureId> =
            model.evidence(&inst).unwrap().iter().take(e.size()).map(|p| p.0).collect();
        prop_assert_eq!(prefix, e.features.iter().copied().collect::<BTreeSet<_>>());
        prop_assert_eq!(model.predict_masked(&inst, &Without(&e.features)).unwrap(), Class::Negative);
        // putting any one member back restores the positive class
        for i in 0..e.size() {
            let mut rest = e.features.clone();
            rest.remove(i);
            prop_assert_eq!(model.predict_masked(&inst, &Without(&rest)).unwrap(), Class::Positive);
        }
    }

    #[test]
    fn shapley_efficiency_and_player_keys(model in model_strategy(), active in active_strategy(12)) {
        let inst = instance(0, &active);
        let game = build_game(&model, &inst).unwrap();
        let phi = exact_shapley(&game).unwrap();
        let gain = game.grand_value() as f64 - game.empty_value() as f64;
        prop_assert!((phi.total() - gain).abs() < 1e-9);
        let keys: Vec<FeatureId> = phi.values.iter().map(|p| p.0).collect();
        prop_assert_eq!(keys.as_slice(), game.players());
    }

    #[test]
    fn shapley_symmetric_players_tie(
        weights in prop::collection::vec(-2i32..6, 1..7),
        copies in 2usize..4,
        q in -3i32..12,
    ) {
        // duplicate the first weight so at least `copies` players share it
        let mut w: Vec<f64> = weights.iter().map(|&x| x as f64 / 2.0).collect();
        w.extend(std::iter::repeat_n(w[0], copies - 1));
        let game = VotingGame::new(
            0,
            w.iter().enumerate().map(|(i, &x)| (FeatureId(i as u32), x)),
            q as f64 / 2.0 + 0.25,
        )
        .unwrap();
        let phi = exact_shapley(&game).unwrap();
        for i in 0..w.len() {
            for j in 0..w.len() {
                if w[i] == w[j] {
                    prop_assert_eq!(phi.values[i].1, phi.values[j].1);
                }
            }
        }
    }

    #[test]
    fn shapley_ignores_positive_rescaling(
        model in model_strategy(),
        active in active_strategy(10),
        exp in -4i32..5,
    ) {
        let inst = instance(0, &active);
        let game = build_game(&model, &inst).unwrap();
        // powers of two scale sums exactly
        let c = 2f64.powi(exp);
        let scaled = VotingGame::new(
            0,
            game.players().iter().map(|&f| (f, game.weight(f).unwrap() * c)),
            game.effective_threshold() * c,
        )
        .unwrap();
        prop_assert_eq!(exact_shapley(&game).unwrap().values, exact_shapley(&scaled).unwrap().values);
    }

    #[test]
    fn aggregation_ignores_input_order(
        model in model_strategy(),
        ds in dataset_strategy(),
        rotate in 0usize..30,
    ) {
        let mut explanations: Vec<_> = ds
            .instances()
            .iter()
            .filter_map(|i| explain_linear(&model, i).unwrap())
            .collect();
        let mut attributions: Vec<AttributionVector> = ds
            .instances()
            .iter()
            .filter(|i| model.predict(i).unwrap() == Class::Positive)
            .map(|i| exact_shapley(&build_game(&model, i).unwrap()).unwrap())
            .collect();
        let ec = aggregate_ec(&explanations, M, EcCredit::InverseSize).unwrap();
        let sh = aggregate_shapley(&attributions, M);
        if !explanations.is_empty() {
            let r = rotate % explanations.len();
            explanations.rotate_left(r);
            explanations.reverse();
        }
        if !attributions.is_empty() {
            let r = rotate % attributions.len();
            attributions.rotate_left(r);
            attributions.reverse();
        }
        prop_assert_eq!(ec, aggregate_ec(&explanations, M, EcCredit::InverseSize).unwrap());
        match sh {
            Ok(sh) => prop_assert_eq!(sh, aggregate_shapley(&attributions, M).unwrap()),
            Err(_) => prop_assert!(aggregate_shapley(&attributions, M).is_err()),
        }
    }

    #[test]
    fn spearman_is_bounded(model in model_strategy(), ds in dataset_strategy(), top_k in 2usize..M) {
        let beta = rank_by_beta(&model);
        let cov = rank_by_coverage(&ds);
        let rho = spearman_topk(&beta, &beta, top_k).unwrap().rho;
        prop_assert_eq!(rho, 1.0);
        if let Ok(r) = spearman_topk(&beta, &cov, top_k) {
            prop_assert!((-1.0..=1.0).contains(&r.rho));
        }
    }

    #[test]
    fn model_text_round_trips(model in model_strategy()) {
        let mut first = Vec::new();
        write_model(&model, &mut first).unwrap();
        let loaded = read_model(first.as_slice(), Path::new("m.tsv"), model.threshold()).unwrap();
        let mut second = Vec::new();
        write_model(&loaded, &mut second).unwrap();
        prop_assert_eq!(&first, &second);
        prop_assert_eq!(loaded.weights().collect::<Vec<_>>(), model.weights().collect::<Vec<_>>());
        prop_assert_eq!(loaded.intercept(), model.intercept());
    }

    #[test]
    fn dataset_text_round_trips(ds in dataset_strategy()) {
        let mut first = Vec::new();
        write_dataset(&ds, &mut first).unwrap();
        let loaded = read_dataset(first.as_slice(), Path::new("d.svm")).unwrap();
        let mut second = Vec::new();
        write_dataset(&loaded, &mut second).unwrap();
        prop_assert_eq!(&first, &second);
        prop_assert_eq!(loaded.instances(), ds.instances());
    }
}
