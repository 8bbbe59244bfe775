use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::eval::{self, MetricsReport};
use crate::graph::{EdgeSplits, HeteroGraph, Triple};
use crate::model::{Embeddings, GraphPlan, ModelParameters};
use crate::sampling::CorruptionSpace;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl std::str::FromStr for Split {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(crate::error::Error::Config(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub train: f64,
    pub valid: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train: 0.8,
            valid: 0.1,
            seed: 0,
        }
    }
}

/// A graph with its edge splits and everything derived from them.
///
/// Message passing runs over training edges only. The sampler filters
/// against training edges only; evaluation filters against every split.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: HeteroGraph,
    pub splits: EdgeSplits,
    pub held_out: Vec<Triple>,
    pub train_graph: HeteroGraph,
    pub plan: GraphPlan,
    pub train_known: HashSet<Triple>,
    pub all_known: HashSet<Triple>,
    pub valid_negatives: Vec<Triple>,
    pub test_negatives: Vec<Triple>,
}

impl Dataset {
    pub fn new(graph: HeteroGraph, held_out: Vec<Triple>, split: &SplitConfig) -> Result<Self> {
        let splits = EdgeSplits::split(graph.edges(), split.train, split.valid, split.seed)?;
        let train_graph = graph.with_edges(splits.train.clone())?;
        let plan = GraphPlan::new(&train_graph);
        let train_known: HashSet<Triple> = splits.train.iter().copied().collect();
        let all_known = splits.all();
        let space = CorruptionSpace::new(&graph, &all_known);
        let mut rng = seed::rng(seed::for_label(split.seed, "eval-negatives"));
        let valid_negatives = eval::sample_negatives(&splits.valid, &space, &mut rng)?;
        let test_negatives = eval::sample_negatives(&splits.test, &space, &mut rng)?;
        Ok(Dataset {
            graph,
            splits,
            held_out,
            train_graph,
            plan,
            train_known,
            all_known,
            valid_negatives,
            test_negatives,
        })
    }

    pub fn edges(&self, split: Split) -> &[Triple] {
        match split {
            Split::Train => &self.splits.train,
            Split::Valid => &self.splits.valid,
            Split::Test => &self.splits.test,
        }
    }

    pub fn held_out_set(&self) -> HashSet<Triple> {
        self.held_out.iter().copied().collect()
    }

    pub fn embeddings(&self, params: &ModelParameters) -> Result<Embeddings> {
        Embeddings::compute(&self.plan, params)
    }

    /// Validation ROC-AUC against the fixed validation negatives.
    pub fn valid_auc(&self, emb: &Embeddings) -> Result<f64> {
        let labeled = eval::classification_scores(emb, &self.splits.valid, &self.valid_negatives);
        eval::roc_auc(&labeled)
    }

    pub fn evaluate(&self, params: &ModelParameters, split: Split, ks: &[usize]) -> Result<MetricsReport> {
        let emb = self.embeddings(params)?;
        let negatives = match split {
            Split::Valid => self.valid_negatives.clone(),
            Split::Test => self.test_negatives.clone(),
            Split::Train => {
                let space = CorruptionSpace::new(&self.graph, &self.all_known);
                let mut rng = seed::rng(seed::for_label(0, "train-negatives"));
                eval::sample_negatives(&self.splits.train, &space, &mut rng)?
            }
        };
        eval::evaluate(&emb, &self.graph, self.edges(split), &negatives, &self.all_known, ks)
    }
}
