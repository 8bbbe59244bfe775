mod common;

use std::collections::HashSet;

use common::{oracle, rng};
use proptest::prelude::*;
use rand::Rng;
use relgnn::eval::{
    average_precision, f1_at, filtered_ranking, hit_at_k, mrr, roc_auc, LabeledScores, RankingCase,
};
use relgnn::graph::Triple;
use relgnn::sampling::Side;
use relgnn::synthetic::{generate_synthetic, SyntheticSpec};

fn random_fixture(r: &mut impl Rng) -> (Vec<f64>, Vec<bool>) {
    let n = r.gen_range(2..40);
    // Coarse grid so ties are common.
    let levels = r.gen_range(2..8);
    let mut labels: Vec<bool> = (0..n).map(|_| r.gen_bool(0.4)).collect();
    labels[0] = true;
    labels[1] = false;
    let scores = (0..n).map(|_| r.gen_range(0..levels) as f64 / levels as f64).collect();
    (scores, labels)
}

#[test]
fn classification_metrics_match_naive_definitions() {
    let mut r = rng(31);
    for _ in 0..200 {
        let (scores, labels) = random_fixture(&mut r);
        let data = LabeledScores::new(scores.clone(), labels.clone()).unwrap();
        assert_eq!(roc_auc(&data).unwrap(), oracle::auc(&scores, &labels));
        assert_eq!(average_precision(&data).unwrap(), oracle::average_precision(&scores, &labels));
        for threshold in [0.0, 0.3, 0.5, 0.9] {
            assert_eq!(f1_at(&data, threshold), oracle::f1(&scores, &labels, threshold));
        }
    }
}

#[test]
fn ranking_metrics_match_naive_definitions() {
    let mut r = rng(32);
    for _ in 0..200 {
        let ranks: Vec<usize> = (0..r.gen_range(1..30)).map(|_| r.gen_range(1..60)).collect();
        let cases: Vec<RankingCase> = ranks
            .iter()
            .map(|&rank| RankingCase { positive: Triple::new(0, 0, 1), side: Side::Tail, num_candidates: 60, rank })
            .collect();
        assert!((mrr(&cases) - oracle::mrr(&ranks)).abs() < 1e-15);
        for k in [1, 3, 10, 30] {
            assert_eq!(hit_at_k(&cases, k), oracle::hit_at(&ranks, k));
        }
    }
}

#[test]
fn single_class_inputs_are_errors() {
    let only_pos = LabeledScores::from_pairs(&[0.1, 0.2], &[]);
    let only_neg = LabeledScores::from_pairs(&[], &[0.3]);
    assert!(roc_auc(&only_pos).is_err());
    assert!(roc_auc(&only_neg).is_err());
    assert!(average_precision(&only_neg).is_err());
    assert!(LabeledScores::new(vec![0.1], vec![]).is_err());
}

fn small_graph() -> relgnn::synthetic::SyntheticGraph {
    let spec = SyntheticSpec {
        node_counts: vec![8, 6, 6],
        attr_dims: vec![4, 5, 4],
        relations: 3,
        edges: 70,
        communities: 2,
        seed: 4,
        ..SyntheticSpec::default()
    };
    generate_synthetic(&spec).unwrap()
}

/// Score in `[0, 1)` with frequent ties.
fn coarse_score(t: &Triple) -> f64 {
    ((t.head * 7 + t.rel * 3 + t.tail * 5) % 6) as f64 / 6.0
}

#[test]
fn filtered_ranks_match_exhaustive_enumeration() {
    let synth = small_graph();
    let g = &synth.graph;
    let test = &g.edges()[..12];
    let known: HashSet<Triple> = g.edges().iter().copied().collect();
    let cases = filtered_ranking(&coarse_score, g, test, &known).unwrap();
    assert_eq!(cases.len(), 2 * test.len());
    for case in &cases {
        let p = case.positive;
        let anchor = if case.side == Side::Head { p.head } else { p.tail };
        let mut competitors = Vec::new();
        for n in 0..g.num_nodes() {
            if g.node_type(n) != g.node_type(anchor) {
                continue;
            }
            let c = if case.side == Side::Head { Triple::new(n, p.rel, p.tail) } else { Triple::new(p.head, p.rel, n) };
            if !known.contains(&c) {
                competitors.push(coarse_score(&c));
            }
        }
        // Pessimistic position of the positive in a descending sort.
        let mut all: Vec<(f64, bool)> = competitors.iter().map(|&s| (s, false)).collect();
        all.push((coarse_score(&p), true));
        all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let position = all.iter().position(|x| x.1).unwrap() + 1;
        assert_eq!(case.num_candidates, competitors.len());
        assert_eq!(case.rank, position);
    }
}

#[test]
fn known_positives_never_compete() {
    let synth = small_graph();
    let g = &synth.graph;
    let known: HashSet<Triple> = g.edges().iter().copied().collect();
    // Known edges score highest, so any leak would push ranks down.
    let scorer = |t: &Triple| if known.contains(t) { 1.0 } else { 0.0 };
    let cases = filtered_ranking(&scorer, g, g.edges(), &known).unwrap();
    assert!(cases.iter().all(|c| c.rank == 1));
    assert_eq!(mrr(&cases), 1.0);
}

proptest! {
    #[test]
    fn auc_is_invariant_under_monotone_transforms(seed in any::<u64>(), shift in -3.0f64..3.0, scale in 0.1f64..10.0) {
        let mut r = rng(seed);
        let (scores, labels) = random_fixture(&mut r);
        let base = roc_auc(&LabeledScores::new(scores.clone(), labels.clone()).unwrap()).unwrap();
        let moved: Vec<f64> = scores.iter().map(|s| (s * scale + shift).exp()).collect();
        let other = roc_auc(&LabeledScores::new(moved, labels.clone()).unwrap()).unwrap();
        prop_assert_eq!(base, other);
        let flipped: Vec<f64> = scores.iter().map(|s| -s).collect();
        let reversed = roc_auc(&LabeledScores::new(flipped, labels).unwrap()).unwrap();
        prop_assert!((base + reversed - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hit_at_k_is_monotone_in_k(ranks in prop::collection::vec(1usize..100, 1..50)) {
        let cases: Vec<RankingCase> = ranks
            .iter()
            .map(|&rank| RankingCase { positive: Triple::new(0, 0, 1), side: Side::Head, num_candidates: 100, rank })
            .collect();
        let hits: Vec<f64> = (1..=100).map(|k| hit_at_k(&cases, k)).collect();
        prop_assert!(hits.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(hits[99], 1.0);
        prop_assert!(mrr(&cases) <= 1.0 && mrr(&cases) > 0.0);
    }

    #[test]
    fn metrics_stay_in_unit_interval(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (scores, labels) = random_fixture(&mut r);
        let data = LabeledScores::new(scores, labels).unwrap();
        for m in [roc_auc(&data).unwrap(), average_precision(&data).unwrap(), f1_at(&data, 0.5)] {
            prop_assert!((0.0..=1.0).contains(&m));
        }
    }
}
