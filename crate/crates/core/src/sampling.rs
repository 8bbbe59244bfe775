//! Negative sampling: random corruption, pooled self-adversarial selection,
//! and adaptive self-adversarial (ASA) selection.
//!
//! A corruption replaces exactly one endpoint of a positive triple with a
//! node of the same type, keeps the relation, and must not be a known
//! positive. Selectors score candidates with a frozen scorer and break ties
//! by lowest pool index.

use std::collections::HashSet;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{HeteroGraph, NodeId, Triple};

/// Attempts per corruption before giving up.
pub const RETRY_BUDGET: usize = 1000;

pub trait TripleScorer {
    fn score(&self, t: &Triple) -> f64;
}

impl<F: Fn(&Triple) -> f64> TripleScorer for F {
    fn score(&self, t: &Triple) -> f64 {
        self(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Head,
    Tail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Corruption {
    pub positive: Triple,
    pub corrupted: Triple,
    pub side: Side,
}

/// Candidate universe for corruptions: node types come from the graph,
/// the positive filter from `known`.
#[derive(Clone, Copy)]
pub struct CorruptionSpace<'a> {
    pub graph: &'a HeteroGraph,
    pub known: &'a HashSet<Triple>,
}

impl<'a> CorruptionSpace<'a> {
    pub fn new(graph: &'a HeteroGraph, known: &'a HashSet<Triple>) -> Self {
        CorruptionSpace { graph, known }
    }

    /// Nodes eligible to replace the `side` endpoint of `positive`.
    pub fn candidates(&self, positive: &Triple, side: Side) -> &'a [NodeId] {
        let replaced = match side {
            Side::Head => positive.head,
            Side::Tail => positive.tail,
        };
        self.graph.nodes_of_type(self.graph.node_type(replaced))
    }

    pub fn replace(positive: &Triple, side: Side, node: NodeId) -> Triple {
        match side {
            Side::Head => Triple::new(node, positive.rel, positive.tail),
            Side::Tail => Triple::new(positive.head, positive.rel, node),
        }
    }

    pub fn is_valid(&self, t: &Triple) -> bool {
        !self.known.contains(t)
    }
}

/// Uniform corruption of a fixed side, rejection-resampled until it is not
/// a known positive.
pub fn corrupt_side<R: Rng + ?Sized>(
    positive: &Triple,
    side: Side,
    space: &CorruptionSpace<'_>,
    rng: &mut R,
) -> Result<Corruption> {
    let cands = space.candidates(positive, side);
    for _ in 0..RETRY_BUDGET {
        let &node = cands
            .choose(rng)
            .ok_or(Error::RetryBudget(positive.head, positive.rel, positive.tail))?;
        let corrupted = CorruptionSpace::replace(positive, side, node);
        if space.is_valid(&corrupted) {
            return Ok(Corruption {
                positive: *positive,
                corrupted,
                side,
            });
        }
    }
    Err(Error::RetryBudget(positive.head, positive.rel, positive.tail))
}

/// Random negative: side chosen uniformly, then a uniform type-matched
/// replacement.
pub fn corrupt_random<R: Rng + ?Sized>(
    positive: &Triple,
    space: &CorruptionSpace<'_>,
    rng: &mut R,
) -> Result<Corruption> {
    let side = if rng.gen_bool(0.5) { Side::Head } else { Side::Tail };
    corrupt_side(positive, side, space, rng)
}

/// `pool_size` independent random corruptions; duplicates allowed.
pub fn draw_pool<R: Rng + ?Sized>(
    positive: &Triple,
    space: &CorruptionSpace<'_>,
    pool_size: usize,
    rng: &mut R,
) -> Result<Vec<Corruption>> {
    (0..pool_size).map(|_| corrupt_random(positive, space, rng)).collect()
}

/// Every valid corruption of `positive`, head side first, ascending node id.
pub fn all_corruptions(positive: &Triple, space: &CorruptionSpace<'_>) -> Vec<Corruption> {
    let mut out = Vec::new();
    for side in [Side::Head, Side::Tail] {
        for &node in space.candidates(positive, side) {
            let corrupted = CorruptionSpace::replace(positive, side, node);
            if space.is_valid(&corrupted) {
                out.push(Corruption {
                    positive: *positive,
                    corrupted,
                    side,
                });
            }
        }
    }
    out
}

/// Index of the maximum score; ties go to the lowest index.
pub fn argmax_score(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Index minimising `|positive_score - s - mu|`; ties go to the lowest index.
pub fn argmin_residual(positive_score: f64, scores: &[f64], mu: f64) -> usize {
    let mut best = 0;
    let mut best_res = f64::INFINITY;
    for (i, &s) in scores.iter().enumerate() {
        let res = (positive_score - s - mu).abs();
        if res < best_res {
            best_res = res;
            best = i;
        }
    }
    best
}

/// Hardest pool element: the one the frozen scorer rates most likely true.
pub fn select_self_adversarial<'p>(
    pool: &'p [Corruption],
    scorer: &dyn TripleScorer,
) -> Result<&'p Corruption> {
    if pool.is_empty() {
        return Err(Error::Config("empty negative pool".into()));
    }
    let scores: Vec<f64> = pool.iter().map(|c| scorer.score(&c.corrupted)).collect();
    Ok(&pool[argmax_score(&scores)])
}

/// Pool element whose score sits closest to `score(positive) - mu`.
pub fn select_asa<'p>(
    positive: &Triple,
    pool: &'p [Corruption],
    scorer: &dyn TripleScorer,
    mu: f64,
) -> Result<&'p Corruption> {
    if pool.is_empty() {
        return Err(Error::Config("empty negative pool".into()));
    }
    if !(mu >= 0.0) {
        return Err(Error::Config(format!("margin must be >= 0, got {mu}")));
    }
    let s_pos = scorer.score(positive);
    let scores: Vec<f64> = pool.iter().map(|c| scorer.score(&c.corrupted)).collect();
    Ok(&pool[argmin_residual(s_pos, &scores, mu)])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Random,
    SelfAdversarial,
    Asa,
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Strategy::Random),
            "self_adversarial" => Ok(Strategy::SelfAdversarial),
            "asa" => Ok(Strategy::Asa),
            other => Err(Error::Config(format!("unknown sampler strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    Constant,
    Linear,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub strategy: Strategy,
    pub pool_size: usize,
    /// Initial margin μ0.
    pub mu: f64,
    pub schedule: Schedule,
    pub rate: f64,
    pub negatives: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            strategy: Strategy::Asa,
            pool_size: 10,
            mu: 0.1,
            schedule: Schedule::Constant,
            rate: 0.0,
            negatives: 1,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pool_size == 0 || self.negatives == 0 {
            return Err(Error::Config("pool_size and negatives must be >= 1".into()));
        }
        if !(self.mu >= 0.0) || !(self.rate >= 0.0) {
            return Err(Error::Config("mu and rate must be >= 0".into()));
        }
        Ok(())
    }
}

/// Margin at `epoch` (0-based); non-increasing in `epoch` and never negative.
pub fn mu_at(epoch: usize, cfg: &SamplerConfig) -> Result<f64> {
    if !(cfg.rate >= 0.0) {
        return Err(Error::Config(format!("negative decay rate {}", cfg.rate)));
    }
    let e = epoch as f64;
    Ok(match cfg.schedule {
        Schedule::Constant => cfg.mu,
        Schedule::Linear => (cfg.mu - cfg.rate * e).max(0.0),
        Schedule::Exponential => cfg.mu * (-cfg.rate * e).exp(),
    })
}

/// Picks `cfg.negatives` corruptions for one positive according to the strategy.
pub fn select_negatives<R: Rng + ?Sized>(
    positive: &Triple,
    space: &CorruptionSpace<'_>,
    scorer: &dyn TripleScorer,
    cfg: &SamplerConfig,
    mu: f64,
    rng: &mut R,
) -> Result<Vec<Corruption>> {
    let mut out = Vec::with_capacity(cfg.negatives);
    for _ in 0..cfg.negatives {
        let chosen = match cfg.strategy {
            Strategy::Random => corrupt_random(positive, space, rng)?,
            Strategy::SelfAdversarial => {
                let pool = draw_pool(positive, space, cfg.pool_size, rng)?;
                *select_self_adversarial(&pool, scorer)?
            }
            Strategy::Asa => {
                let pool = draw_pool(positive, space, cfg.pool_size, rng)?;
                *select_asa(positive, &pool, scorer, mu)?
            }
        };
        out.push(chosen);
    }
    Ok(out)
}

/// Fraction of selected corruptions that are actually held-out true edges.
pub fn false_negative_rate(selected: &[Corruption], held_out: &HashSet<Triple>) -> f64 {
    if selected.is_empty() {
        return 0.0;
    }
    let hits = selected
        .iter()
        .filter(|c| held_out.contains(&c.corrupted))
        .count();
    hits as f64 / selected.len() as f64
}
