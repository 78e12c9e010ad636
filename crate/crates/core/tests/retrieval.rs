mod common;

use cuh::index::{pack, rank_all, search_radius, search_topk, PackedCodeMatrix};
use cuh::io::synth_generate;
use cuh::metrics::{
    batch_topk, evaluate, evaluate_cross_modal, mean_ap, precision_recall, topn_precision, DatabaseCodes,
    EvalConfig, RelevanceJudge,
};
use cuh::optimizer::train;
use cuh::Hyperparams;
use proptest::prelude::*;

fn random_codes(seed: u64, r: usize, n: usize) -> PackedCodeMatrix {
    let mut rng = common::rng(seed);
    pack(&common::codes(&mut rng, r, n))
}

#[test]
fn evaluate_agrees_with_standalone_metrics() {
    let db = random_codes(1, 20, 300);
    let queries = random_codes(2, 20, 25);
    let labels = |n: usize, off: usize| -> Vec<Vec<u32>> {
        (0..n).map(|i| vec![((i + off) % 4) as u32, 4 + ((i * 7) % 3) as u32]).collect()
    };
    let judge = RelevanceJudge::new(labels(25, 1), labels(300, 0));
    let cfg = EvalConfig { r_cut: 50, n_grid: vec![1, 10, 100, 1000] };
    let report = evaluate(&db, &queries, &judge, &cfg).unwrap();

    let full: Vec<_> = (0..25).map(|q| rank_all(&db, &queries.query(q)).unwrap()).collect();
    assert_eq!(report.map, mean_ap(&full, &judge, 50).unwrap());
    assert_eq!(report.topn_curve, topn_precision(&full, &judge, &cfg.n_grid).unwrap());
    assert_eq!(report.pr_curve, precision_recall(&full, &judge, 20).unwrap());
    assert_eq!(report.topn_curve.last().unwrap().0, 300);

    let top = batch_topk(&db, &queries, 50).unwrap();
    for (a, b) in top.iter().zip(&full) {
        assert_eq!(a.neighbors[..], b.neighbors[..50]);
    }
}

#[test]
fn pr_curve_is_monotone_in_recall_and_ends_at_one() {
    let db = random_codes(3, 12, 200);
    let queries = random_codes(4, 12, 10);
    let judge = RelevanceJudge::from_categories(
        &(0..10).map(|i| i % 3).collect::<Vec<_>>(),
        &(0..200).map(|i| i % 3).collect::<Vec<_>>(),
    );
    let report = evaluate(&db, &queries, &judge, &EvalConfig::default()).unwrap();
    assert_eq!(report.pr_curve.len(), 13);
    assert!(report.pr_curve.windows(2).all(|w| w[0].recall <= w[1].recall));
    let last = report.pr_curve.last().unwrap();
    assert_eq!(last.recall, 1.0);
    assert!((last.precision - 1.0 / 3.0).abs() < 0.05);
}

#[test]
fn radius_search_matches_distance_filter() {
    let db = random_codes(5, 16, 500);
    let q = random_codes(6, 16, 1).query(0);
    let all = rank_all(&db, &q).unwrap();
    for radius in [0, 3, 8, 16] {
        let hits = search_radius(&db, &q, radius).unwrap();
        let expect: Vec<_> = all.neighbors.iter().filter(|n| n.distance <= radius).cloned().collect();
        assert_eq!(hits.neighbors, expect);
    }
}

#[test]
fn too_few_clusters_hurt_retrieval() {
    // With a tight code budget the cluster term is what separates classes.
    let all = synth_generate(5, 600, 32, 16, 0.5, 3).unwrap();
    let (db, queries) = all.split_at(500).unwrap();
    let cfg = EvalConfig { r_cut: 100, ..EvalConfig::default() };
    let score = |c: usize| {
        let hp = Hyperparams { num_clusters: c, code_length: 4, seed: 3, ..Hyperparams::default() };
        let (model, _) = train(&db, &hp).unwrap();
        let r = evaluate_cross_modal(&model, &queries, db.labels().unwrap(), DatabaseCodes::Trained, &cfg).unwrap();
        0.5 * (r[0].map + r[1].map)
    };
    let five = score(5);
    for c in [2, 3] {
        let fewer = score(c);
        assert!(five > fewer, "C=5 gave {five}, C={c} gave {fewer}");
    }
}

proptest! {
    #[test]
    fn topk_is_a_prefix_of_the_full_ranking(seed in 0u64..1000, k in 1usize..80, r in 1usize..130) {
        let db = random_codes(seed, r, 60);
        let q = random_codes(seed + 1, r, 1).query(0);
        let full = rank_all(&db, &q).unwrap();
        let top = search_topk(&db, &q, k).unwrap();
        prop_assert_eq!(&top.neighbors[..], &full.neighbors[..k.min(60)]);
    }

    #[test]
    fn map_lies_in_unit_interval(seed in 0u64..500, r_cut in 1usize..200) {
        let db = random_codes(seed, 8, 100);
        let queries = random_codes(seed + 7, 8, 5);
        let judge = RelevanceJudge::from_categories(&[0, 1, 0, 1, 2], &(0..100).map(|i| (i % 3) as u32).collect::<Vec<_>>());
        let cfg = EvalConfig { r_cut, n_grid: vec![1, 50] };
        let report = evaluate(&db, &queries, &judge, &cfg).unwrap();
        prop_assert!((0.0..=1.0).contains(&report.map));
    }
}
