//! Noise-contrastive training with a pluggable negative sampler.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Var};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::Triple;
use crate::model::{bind, forward, score_on_tape, Embeddings, GraphPlan, ModelConfig, ModelParameters};
use crate::sampling::{self, mu_at, Corruption, CorruptionSpace, SamplerConfig, TripleScorer};
use crate::seed;
use crate::tensor::Tensor;

/// Scores are clamped to `[EPS, 1 - EPS]` before taking logs.
pub const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub optimizer: OptimizerKind,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Positives per optimisation step.
    pub batch_size: usize,
    pub weight_decay: f64,
    /// Epochs without validation-AUC improvement before stopping.
    pub patience: usize,
    /// Shuffle seed.
    pub seed: u64,
    /// Configured in its own section of a run config.
    #[serde(skip)]
    pub sampler: SamplerConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            lr: 1e-3,
            optimizer: OptimizerKind::Adam,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 128,
            weight_decay: 0.0,
            patience: 10,
            seed: 0,
            sampler: SamplerConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0) {
            return Err(Error::Config(format!("learning rate must be >= 0, got {}", self.lr)));
        }
        if self.patience == 0 || self.batch_size == 0 {
            return Err(Error::Config("patience and batch_size must be >= 1".into()));
        }
        self.sampler.validate()
    }
}

/// Mean over the batch of `-ln s_pos - Σ ln(1 - s_neg)`; `negatives[i]`
/// holds the negatives paired with `positives[i]`.
pub fn bce_pair_loss(positives: &[f64], negatives: &[Vec<f64>]) -> f64 {
    let clamp = |s: f64| s.clamp(EPS, 1.0 - EPS);
    let total: f64 = positives
        .iter()
        .zip(negatives)
        .map(|(&p, negs)| -clamp(p).ln() - negs.iter().map(|&n| (1.0 - clamp(n)).ln()).sum::<f64>())
        .sum();
    total / positives.len() as f64
}

/// Tape version of [`bce_pair_loss`] with all negatives stacked in one column.
pub fn bce_pair_loss_on_tape<'t>(pos: Var<'t>, neg: Var<'t>, batch: usize) -> Result<Var<'t>> {
    let tape = pos.tape();
    let pos_term = pos.clamp(EPS, 1.0 - EPS).log().sum();
    let ones = tape.constant(Tensor::filled(neg.shape().0, 1, 1.0));
    let neg_term = ones.sub(neg.clamp(EPS, 1.0 - EPS))?.log().sum();
    Ok(pos_term.add(neg_term)?.scale(-1.0 / batch as f64))
}

/// Loss of a batch and its gradient with respect to every parameter array.
pub fn loss_and_gradients(
    params: &ModelParameters,
    plan: &GraphPlan,
    positives: &[Triple],
    negatives: &[Triple],
) -> Result<(f64, Vec<Option<Tensor>>)> {
    let tape = Tape::new();
    let vars = bind(params, &tape, true);
    let fwd = forward(plan, params, &vars, &tape)?;
    let pos = score_on_tape(fwd.final_states, fwd.relation, positives)?;
    let neg = score_on_tape(fwd.final_states, fwd.relation, negatives)?;
    let loss = bce_pair_loss_on_tape(pos, neg, positives.len())?;
    let grads = tape.backward(loss)?;
    let value = loss.value().item();
    Ok((value, vars.iter().map(|&v| grads.wrt(v).cloned()).collect()))
}

#[derive(Debug, Clone)]
enum OptimizerState {
    Sgd,
    Adam { m: Vec<Tensor>, v: Vec<Tensor>, step: u64 },
}

/// Everything that evolves during training.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub params: ModelParameters,
    pub epoch: usize,
    optimizer: OptimizerState,
    pub best_val_auc: f64,
}

impl TrainState {
    pub fn new(params: ModelParameters, cfg: &TrainConfig) -> Self {
        let optimizer = match cfg.optimizer {
            OptimizerKind::Sgd => OptimizerState::Sgd,
            OptimizerKind::Adam => OptimizerState::Adam {
                m: params.arrays.iter().map(|a| Tensor::zeros(a.rows(), a.cols())).collect(),
                v: params.arrays.iter().map(|a| Tensor::zeros(a.rows(), a.cols())).collect(),
                step: 0,
            },
        };
        TrainState {
            params,
            epoch: 0,
            optimizer,
            best_val_auc: f64::NEG_INFINITY,
        }
    }

    fn step(&mut self, grads: &[Option<Tensor>], cfg: &TrainConfig) {
        if cfg.lr == 0.0 {
            return;
        }
        if let OptimizerState::Adam { step, .. } = &mut self.optimizer {
            *step += 1;
        }
        for (i, param) in self.params.arrays.iter_mut().enumerate() {
            let Some(g) = &grads[i] else {
                if cfg.weight_decay == 0.0 {
                    continue;
                }
                // Decay still applies to parameters the loss does not reach.
                let zero = Tensor::zeros(param.rows(), param.cols());
                apply(&mut self.optimizer, i, param, &zero, cfg);
                continue;
            };
            apply(&mut self.optimizer, i, param, g, cfg);
        }
    }
}

fn apply(opt: &mut OptimizerState, i: usize, param: &mut Tensor, g: &Tensor, cfg: &TrainConfig) {
    let wd = cfg.weight_decay;
    match opt {
        OptimizerState::Sgd => {
            for (p, &gv) in param.data_mut().iter_mut().zip(g.data()) {
                *p -= cfg.lr * (gv + wd * *p);
            }
        }
        OptimizerState::Adam { m, v, step } => {
            let t = *step as i32;
            let c1 = 1.0 - cfg.beta1.powi(t);
            let c2 = 1.0 - cfg.beta2.powi(t);
            let m = m[i].data_mut();
            let v = v[i].data_mut();
            for (k, p) in param.data_mut().iter_mut().enumerate() {
                let gv = g.data()[k] + wd * *p;
                m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * gv;
                v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * gv * gv;
                let mh = m[k] / c1;
                let vh = v[k] / c2;
                *p -= cfg.lr * mh / (vh.sqrt() + cfg.eps);
            }
        }
    }
}

/// Per-epoch training statistics; one JSON line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    /// 1-based.
    pub epoch: usize,
    pub loss: f64,
    pub val_auc: f64,
    pub mu: f64,
    pub mean_neg_score: f64,
    pub fn_rate: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct EpochStats {
    pub loss: f64,
    pub mu: f64,
    pub mean_neg_score: f64,
    pub selected: Vec<Corruption>,
}

/// Selects negatives for `positives` (global indices `ids`) against a frozen scorer.
pub fn select_batch_negatives(
    data: &Dataset,
    positives: &[Triple],
    ids: &[usize],
    scorer: &dyn TripleScorer,
    sampler: &SamplerConfig,
    epoch: usize,
    mu: f64,
) -> Result<Vec<Corruption>> {
    let space = CorruptionSpace::new(&data.graph, &data.train_known);
    let mut out = Vec::with_capacity(positives.len() * sampler.negatives);
    for (p, &id) in positives.iter().zip(ids) {
        let mut rng = seed::rng(seed::for_counters(sampler.seed, &[epoch as u64, id as u64]));
        out.extend(sampling::select_negatives(p, &space, scorer, sampler, mu, &mut rng)?);
    }
    Ok(out)
}

/// One pass over the shuffled training positives. The sampler scores with a
/// snapshot taken at the start of the epoch.
pub fn train_epoch(state: &mut TrainState, data: &Dataset, cfg: &TrainConfig) -> Result<EpochStats> {
    let train = &data.splits.train;
    if train.is_empty() {
        return Err(Error::Config("no training edges".into()));
    }
    let epoch = state.epoch;
    let mu = mu_at(epoch, &cfg.sampler)?;
    let snapshot = Embeddings::compute(&data.plan, &state.params)?;

    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut seed::rng(seed::for_counters(
        seed::for_label(cfg.seed, "shuffle"),
        &[epoch as u64],
    )));

    let mut loss_sum = 0.0;
    let mut selected_all = Vec::with_capacity(train.len() * cfg.sampler.negatives);
    for ids in order.chunks(cfg.batch_size) {
        let positives: Vec<Triple> = ids.iter().map(|&i| train[i]).collect();
        let selected = select_batch_negatives(data, &positives, ids, &snapshot, &cfg.sampler, epoch, mu)?;
        let negatives: Vec<Triple> = selected.iter().map(|c| c.corrupted).collect();
        let (loss, grads) = loss_and_gradients(&state.params, &data.plan, &positives, &negatives)?;
        if !loss.is_finite() {
            let neg_scores: Vec<f64> = negatives.iter().map(|t| snapshot.score(t)).collect();
            let pos_scores: Vec<f64> = positives.iter().map(|t| snapshot.score(t)).collect();
            return Err(Error::NonFiniteLoss {
                epoch: epoch + 1,
                dump: format!(
                    "positives {positives:?} scores {pos_scores:?}; negatives {negatives:?} scores {neg_scores:?}"
                ),
            });
        }
        state.step(&grads, cfg);
        loss_sum += loss * positives.len() as f64;
        selected_all.extend(selected);
    }
    state.epoch += 1;
    let mean_neg_score = selected_all
        .iter()
        .map(|c| snapshot.score(&c.corrupted))
        .sum::<f64>()
        / selected_all.len() as f64;
    Ok(EpochStats {
        loss: loss_sum / train.len() as f64,
        mu,
        mean_neg_score,
        selected: selected_all,
    })
}

#[derive(Debug, Clone)]
pub struct FitResult {
    /// Parameters at the best validation epoch.
    pub best: ModelParameters,
    pub best_epoch: usize,
    pub best_val_auc: f64,
    pub log: Vec<EpochLog>,
    /// Parameters after the last epoch run.
    pub last: ModelParameters,
}

/// Trains with early stopping on validation ROC-AUC.
pub fn fit(data: &Dataset, model: ModelConfig, cfg: &TrainConfig) -> Result<FitResult> {
    cfg.validate()?;
    let params = ModelParameters::init(model)?;
    let held_out: Option<HashSet<Triple>> = if data.held_out.is_empty() {
        None
    } else {
        Some(data.held_out_set())
    };
    let mut state = TrainState::new(params.clone(), cfg);
    let mut best = params;
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut log = Vec::new();
    for _ in 0..cfg.epochs {
        let stats = train_epoch(&mut state, data, cfg)?;
        let emb = data.embeddings(&state.params)?;
        let val_auc = data.valid_auc(&emb)?;
        log.push(EpochLog {
            epoch: state.epoch,
            loss: stats.loss,
            val_auc,
            mu: stats.mu,
            mean_neg_score: stats.mean_neg_score,
            fn_rate: held_out
                .as_ref()
                .map(|h| sampling::false_negative_rate(&stats.selected, h)),
        });
        if val_auc > state.best_val_auc {
            state.best_val_auc = val_auc;
            best = state.params.clone();
            best_epoch = state.epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    Ok(FitResult {
        best,
        best_epoch,
        best_val_auc: state.best_val_auc,
        log,
        last: state.params,
    })
}

pub fn log_jsonl(log: &[EpochLog]) -> String {
    log.iter()
        .map(|row| serde_json::to_string(row).expect("log row serialises") + "\n")
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bce_examples() {
        let loss = bce_pair_loss(&[1.0 - EPS], &[vec![EPS]]);
        assert!(loss < 1e-11);
        let half = bce_pair_loss(&[0.5], &[vec![0.5]]);
        assert!((half - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        // Exact endpoints are clamped rather than producing infinities.
        assert!(bce_pair_loss(&[0.0], &[vec![1.0]]).is_finite());
    }

    #[test]
    fn tape_loss_matches_scalar_loss() {
        let pos = [0.9, 0.3, 0.55];
        let neg = [0.2, 0.7, 0.01];
        let tape = Tape::new();
        let p = tape.constant(Tensor::column(&pos));
        let n = tape.constant(Tensor::column(&neg));
        let l = bce_pair_loss_on_tape(p, n, 3).unwrap();
        let scalar = bce_pair_loss(&pos, &neg.iter().map(|&v| vec![v]).collect::<Vec<_>>());
        assert!((l.value().item() - scalar).abs() < 1e-12);
    }
}
