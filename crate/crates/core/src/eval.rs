//! Binary classification metrics and filtered ranking metrics.

use std::collections::HashSet;

use indexmap::IndexMap;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{HeteroGraph, Triple};
use crate::sampling::{corrupt_random, CorruptionSpace, Side, TripleScorer};

/// Parallel scores and binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScores {
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
}

impl LabeledScores {
    pub fn new(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::Metric(format!(
                "{} scores but {} labels",
                scores.len(),
                labels.len()
            )));
        }
        Ok(LabeledScores { scores, labels })
    }

    pub fn from_pairs(positive: &[f64], negative: &[f64]) -> Self {
        let scores = positive.iter().chain(negative).copied().collect();
        let labels = std::iter::repeat_n(true, positive.len())
            .chain(std::iter::repeat_n(false, negative.len()))
            .collect();
        LabeledScores { scores, labels }
    }

    fn class_counts(&self) -> (usize, usize) {
        let p = self.labels.iter().filter(|&&l| l).count();
        (p, self.labels.len() - p)
    }
}

/// Exact Mann–Whitney AUC: `P(s_pos > s_neg) + ½ P(s_pos = s_neg)` over all
/// positive/negative pairs, accumulated in integers.
pub fn roc_auc(data: &LabeledScores) -> Result<f64> {
    let (p, n) = data.class_counts();
    if p == 0 || n == 0 {
        return Err(Error::Metric("roc_auc needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..data.scores.len()).collect();
    order.sort_by(|&a, &b| data.scores[a].total_cmp(&data.scores[b]));
    // Twice the Mann–Whitney U statistic.
    let mut twice_u: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let s = data.scores[order[i]];
        let mut j = i;
        let (mut pos_here, mut neg_here) = (0u128, 0u128);
        while j < order.len() && data.scores[order[j]] == s {
            if data.labels[order[j]] {
                pos_here += 1;
            } else {
                neg_here += 1;
            }
            j += 1;
        }
        twice_u += pos_here * (2 * neg_below + neg_here);
        neg_below += neg_here;
        i = j;
    }
    Ok(twice_u as f64 / (2 * p as u128 * n as u128) as f64)
}

/// Step-wise average precision: mean over positives of precision at the
/// positive's position, descending score, ties in input order.
pub fn average_precision(data: &LabeledScores) -> Result<f64> {
    let (p, _) = data.class_counts();
    if p == 0 {
        return Err(Error::Metric("average_precision needs a positive".into()));
    }
    let mut order: Vec<usize> = (0..data.scores.len()).collect();
    order.sort_by(|&a, &b| data.scores[b].total_cmp(&data.scores[a]));
    let mut hits = 0usize;
    let mut total = 0.0;
    for (k, &i) in order.iter().enumerate() {
        if data.labels[i] {
            hits += 1;
            total += hits as f64 / (k + 1) as f64;
        }
    }
    Ok(total / p as f64)
}

/// F1 with `score >= threshold` predicted positive; 0 when nothing is
/// predicted positive.
pub fn f1_at(data: &LabeledScores, threshold: f64) -> f64 {
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&s, &l) in data.scores.iter().zip(&data.labels) {
        match (s >= threshold, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            _ => {}
        }
    }
    if tp + fp == 0 || tp == 0 {
        return 0.0;
    }
    (2 * tp) as f64 / (2 * tp + fp + fneg) as f64
}

/// One filtered ranking case: a test triple ranked against every surviving
/// corruption of one side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingCase {
    pub positive: Triple,
    pub side: Side,
    pub num_candidates: usize,
    /// 1-based; ties with negatives count against the positive.
    pub rank: usize,
}

/// Ranks each test triple (both sides) among its type-valid corruptions
/// that are not in `known`.
pub fn filtered_ranking(
    scorer: &dyn TripleScorer,
    graph: &HeteroGraph,
    test_edges: &[Triple],
    known: &HashSet<Triple>,
) -> Result<Vec<RankingCase>> {
    let space = CorruptionSpace::new(graph, known);
    let mut cases = Vec::with_capacity(2 * test_edges.len());
    for positive in test_edges {
        let s_pos = scorer.score(positive);
        for side in [Side::Head, Side::Tail] {
            let mut num_candidates = 0;
            let mut at_least = 0;
            for &node in space.candidates(positive, side) {
                let c = CorruptionSpace::replace(positive, side, node);
                if known.contains(&c) {
                    continue;
                }
                num_candidates += 1;
                if scorer.score(&c) >= s_pos {
                    at_least += 1;
                }
            }
            if num_candidates == 0 {
                return Err(Error::Metric(format!(
                    "no candidates for {positive:?} on side {side:?}"
                )));
            }
            cases.push(RankingCase {
                positive: *positive,
                side,
                num_candidates,
                rank: at_least + 1,
            });
        }
    }
    Ok(cases)
}

pub fn mrr(cases: &[RankingCase]) -> f64 {
    if cases.is_empty() {
        return 0.0;
    }
    cases.iter().map(|c| 1.0 / c.rank as f64).sum::<f64>() / cases.len() as f64
}

pub fn hit_at_k(cases: &[RankingCase], k: usize) -> f64 {
    if cases.is_empty() {
        return 0.0;
    }
    cases.iter().filter(|c| c.rank <= k).count() as f64 / cases.len() as f64
}

/// One random valid corruption per edge, for classification metrics.
pub fn sample_negatives<R: Rng + ?Sized>(
    edges: &[Triple],
    space: &CorruptionSpace<'_>,
    rng: &mut R,
) -> Result<Vec<Triple>> {
    edges
        .iter()
        .map(|e| corrupt_random(e, space, rng).map(|c| c.corrupted))
        .collect()
}

pub fn classification_scores(scorer: &dyn TripleScorer, positives: &[Triple], negatives: &[Triple]) -> LabeledScores {
    let pos: Vec<f64> = positives.iter().map(|t| scorer.score(t)).collect();
    let neg: Vec<f64> = negatives.iter().map(|t| scorer.score(t)).collect();
    LabeledScores::from_pairs(&pos, &neg)
}

pub const DEFAULT_KS: [usize; 3] = [1, 10, 30];

/// Serializable metric bundle; field names are fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub auc: f64,
    pub ap: f64,
    #[serde(rename = "f1_at_0.5")]
    pub f1_at_half: f64,
    pub mrr: f64,
    pub hit: IndexMap<String, f64>,
    pub n_cases: usize,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialises")
    }

    pub fn hit_at(&self, k: usize) -> Option<f64> {
        self.hit.get(&k.to_string()).copied()
    }
}

/// Classification metrics on `positives` vs `negatives` plus filtered
/// ranking metrics on `positives`.
pub fn evaluate(
    scorer: &dyn TripleScorer,
    graph: &HeteroGraph,
    positives: &[Triple],
    negatives: &[Triple],
    known: &HashSet<Triple>,
    ks: &[usize],
) -> Result<MetricsReport> {
    let labeled = classification_scores(scorer, positives, negatives);
    let cases = filtered_ranking(scorer, graph, positives, known)?;
    Ok(MetricsReport {
        auc: roc_auc(&labeled)?,
        ap: average_precision(&labeled)?,
        f1_at_half: f1_at(&labeled, 0.5),
        mrr: mrr(&cases),
        hit: ks.iter().map(|&k| (k.to_string(), hit_at_k(&cases, k))).collect(),
        n_cases: cases.len(),
    })
}
