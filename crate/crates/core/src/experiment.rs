//! Multi-run studies on top of [`RunConfig`]: seed sweeps, sampler
//! comparisons, the margin sweep, false-negative accounting under a frozen
//! scorer, and the attention × sampler ablation grid.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::config::RunConfig;
use crate::data::Dataset;
use crate::error::Result;
use crate::eval::MetricsReport;
use crate::graph::{load_graph, read_edges, LoadOptions, Triple};
use crate::model::{Embeddings, ModelConfig};
use crate::sampling::{self, SamplerConfig, Strategy, TripleScorer};
use crate::synthetic::generate_synthetic;
use crate::train::{fit, select_batch_negatives, FitResult};

/// Text of the shared benchmark protocol.
pub const BENCHMARK_TOML: &str = include_str!("../configs/benchmark.toml");

/// The benchmark protocol at `seed`, with `overrides` applied.
pub fn benchmark(seed: u64, overrides: &[(&str, &str)]) -> Result<RunConfig> {
    let mut all: Vec<(String, String)> = vec![("seed".into(), seed.to_string())];
    all.extend(overrides.iter().map(|(k, v)| (k.to_string(), v.to_string())));
    RunConfig::from_toml_with(BENCHMARK_TOML, None, &all)
}

/// Builds the dataset a config describes: generated or loaded from files.
pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let (graph, held_out) = match (&cfg.data.synthetic, &cfg.data.nodes, &cfg.data.edges) {
        (Some(spec), _, _) => {
            let g = generate_synthetic(spec)?;
            (g.graph, g.held_out)
        }
        (None, Some(nodes), Some(edges)) => {
            let opts = LoadOptions {
                add_reverse: cfg.data.add_reverse,
                num_relations: None,
            };
            let graph = load_graph(nodes, edges, opts)?;
            let held_out = match &cfg.data.heldout {
                Some(p) => read_edges(p)?,
                None => Vec::new(),
            };
            (graph, held_out)
        }
        _ => unreachable!("RunConfig::validate admits no other data shape"),
    };
    Dataset::new(graph, held_out, &cfg.split)
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub seed: u64,
    pub fit: FitResult,
    /// Metrics of the best checkpoint on the configured evaluation split.
    pub report: MetricsReport,
}

impl TrialOutcome {
    /// Mean over epochs of the training-time false-negative rate.
    pub fn mean_fn_rate(&self) -> Option<f64> {
        let rates: Vec<f64> = self.fit.log.iter().filter_map(|l| l.fn_rate).collect();
        (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64)
    }
}

/// Trains and evaluates one configuration.
pub fn run_trial(cfg: &RunConfig) -> Result<(Dataset, TrialOutcome)> {
    let data = load_dataset(cfg)?;
    let model = ModelConfig::for_graph(&cfg.model, &data.graph)?;
    let fit = fit(&data, model, &cfg.train_config())?;
    let report = data.evaluate(&fit.best, cfg.eval.split, &cfg.eval.ks)?;
    Ok((
        data,
        TrialOutcome {
            seed: cfg.seed,
            fit,
            report,
        },
    ))
}

/// Runs the benchmark protocol once per seed.
pub fn seed_sweep(seeds: &[u64], overrides: &[(&str, &str)]) -> Result<Vec<TrialOutcome>> {
    seeds
        .iter()
        .map(|&s| run_trial(&benchmark(s, overrides)?).map(|(_, o)| o))
        .collect()
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Summary { mean, sd, n }
    }

    /// Pooled standard deviation of two equally weighted groups.
    pub fn pooled_sd(&self, other: &Summary) -> f64 {
        let (a, b) = (self.n as f64 - 1.0, other.n as f64 - 1.0);
        if a + b <= 0.0 {
            return 0.0;
        }
        ((a * self.sd.powi(2) + b * other.sd.powi(2)) / (a + b)).sqrt()
    }
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.4} ± {:.4}", self.mean, self.sd)
    }
}

pub fn summarize(outcomes: &[TrialOutcome], metric: impl Fn(&MetricsReport) -> f64) -> Summary {
    Summary::of(&outcomes.iter().map(|o| metric(&o.report)).collect::<Vec<_>>())
}

/// Mean Hit@`k` over seeds for each margin.
pub fn mu_sweep(mus: &[f64], seeds: &[u64], k: usize) -> Result<Vec<(f64, Summary)>> {
    mus.iter()
        .map(|&mu| {
            let mu_text = mu.to_string();
            let outcomes = seed_sweep(seeds, &[("sampler.strategy", "asa"), ("sampler.mu", &mu_text)])?;
            let hits = summarize(&outcomes, |r| r.hit_at(k).unwrap_or(f64::NAN));
            Ok((mu, hits))
        })
        .collect()
}

/// Fraction of negatives selected for the training positives that are
/// held-out true edges, with `scorer` frozen. Selection is repeated `rounds`
/// times with independent draws.
pub fn frozen_false_negative_rate(
    data: &Dataset,
    scorer: &dyn TripleScorer,
    sampler: &SamplerConfig,
    held_out: &HashSet<Triple>,
    rounds: usize,
) -> Result<f64> {
    let train = &data.splits.train;
    let ids: Vec<usize> = (0..train.len()).collect();
    let mut selected = Vec::with_capacity(train.len() * rounds);
    for round in 0..rounds {
        selected.extend(select_batch_negatives(data, train, &ids, scorer, sampler, round, sampler.mu)?);
    }
    Ok(sampling::false_negative_rate(&selected, held_out))
}

/// False-negative rates of several samplers against one trained scorer.
#[derive(Debug, Clone, Serialize)]
pub struct FalseNegativeRow {
    pub seed: u64,
    /// `(label, rate)` per sampler, in the order requested.
    pub rates: Vec<(String, f64)>,
}

/// Trains the benchmark model for each seed, freezes it, and measures each
/// sampler's false-negative rate against the held-out edges.
pub fn false_negative_study(
    seeds: &[u64],
    samplers: &[(String, SamplerConfig)],
    rounds: usize,
) -> Result<Vec<FalseNegativeRow>> {
    seeds
        .iter()
        .map(|&seed| {
            let cfg = benchmark(seed, &[])?;
            let (data, outcome) = run_trial(&cfg)?;
            let scorer = Embeddings::compute(&data.plan, &outcome.fit.best)?;
            let held = data.held_out_set();
            let rates = samplers
                .iter()
                .map(|(label, s)| {
                    let s = SamplerConfig {
                        seed: cfg.sampler.seed,
                        ..s.clone()
                    };
                    frozen_false_negative_rate(&data, &scorer, &s, &held, rounds).map(|r| (label.clone(), r))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(FalseNegativeRow { seed, rates })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationCell {
    pub attention: bool,
    pub strategy: Strategy,
    pub auc: Summary,
    pub ap: Summary,
    pub mrr: Summary,
    pub hit10: Summary,
}

/// {attention on, off} × {ASA, random}, each cell over `seeds`.
pub fn ablation_grid(seeds: &[u64]) -> Result<Vec<AblationCell>> {
    let mut cells = Vec::with_capacity(4);
    for attention in [true, false] {
        for strategy in [Strategy::Asa, Strategy::Random] {
            let att = attention.to_string();
            let strat = match strategy {
                Strategy::Asa => "asa",
                Strategy::Random => "random",
                Strategy::SelfAdversarial => "self_adversarial",
            };
            let outcomes = seed_sweep(seeds, &[("model.attention", &att), ("sampler.strategy", strat)])?;
            cells.push(AblationCell {
                attention,
                strategy,
                auc: summarize(&outcomes, |r| r.auc),
                ap: summarize(&outcomes, |r| r.ap),
                mrr: summarize(&outcomes, |r| r.mrr),
                hit10: summarize(&outcomes, |r| r.hit_at(10).unwrap_or(f64::NAN)),
            });
        }
    }
    Ok(cells)
}

/// Markdown comparison table of an ablation grid.
pub fn ablation_table(cells: &[AblationCell]) -> String {
    let mut out = String::from("| attention | sampler | AUC | AP | MRR | Hit@10 |\n|---|---|---|---|---|---|\n");
    for c in cells {
        let _ = writeln!(
            out,
            "| {} | {:?} | {} | {} | {} | {} |",
            if c.attention { "on" } else { "off" },
            c.strategy,
            c.auc,
            c.ap,
            c.mrr,
            c.hit10
        );
    }
    out
}
