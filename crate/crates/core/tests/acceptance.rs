//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion.
//!
//! Correctness properties (1, 2, 3, 4, 6, 10) fail the process. The
//! synthetic replication criteria (5, 7, 8, 9) report their outcome and
//! measured numbers without failing it unless `RELGNN_ACCEPTANCE_STRICT=1`.

mod common;

use std::collections::HashSet;
use std::time::{Duration, Instant};

use common::{max_gradient_error, model_config, oracle, plan, random_graph, random_params, rng};
use rand::Rng;
use relgnn::autodiff::segment_softmax;
use relgnn::eval::{average_precision, f1_at, hit_at_k, mrr, roc_auc, LabeledScores, RankingCase};
use relgnn::experiment::{
    ablation_grid, ablation_table, benchmark, false_negative_study, mu_sweep, run_trial, seed_sweep, summarize,
};
use relgnn::graph::Triple;
use relgnn::model::{attention_entropy, attribute_embed, entropy_csv, propagate_layer, Embeddings};
use relgnn::sampling::{
    all_corruptions, select_asa, select_self_adversarial, CorruptionSpace, SamplerConfig, Side, Strategy,
    TripleScorer,
};
use relgnn::synthetic::SyntheticSpec;
use relgnn::train::log_jsonl;

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const GRAD_TOL: f64 = 1e-4;
const GRAD_BUDGET: Duration = Duration::from_secs(30);
const SUM_TOL: f64 = 1e-10;
const SHIFT_TOL: f64 = 1e-12;
const ATTENTION_FIXTURES: u64 = 1000;
const ORACLE_INSTANCES: u64 = 500;
const METRIC_FIXTURES: u64 = 200;
const COMPARISON_BUDGET: Duration = Duration::from_secs(600);
const FN_ROUNDS: usize = 3;
const MUS: [f64; 6] = [0.0, 0.05, 0.1, 0.15, 0.2, 0.3];
const ENTROPY_MIN_DEGREE: usize = 4;
const ENTROPY_FRACTION: f64 = 0.75;
const CONCENTRATED_SHARE: f64 = 0.5;

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Property,
    Replication,
}

struct Outcome {
    id: u32,
    name: &'static str,
    kind: Kind,
    pass: bool,
    detail: String,
}

fn outcome(id: u32, name: &'static str, kind: Kind, pass: bool, detail: String) -> Outcome {
    Outcome { id, name, kind, pass, detail }
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let err = max_gradient_error(0, true);
    let elapsed = start.elapsed();
    let pass = err < GRAD_TOL && elapsed < GRAD_BUDGET;
    outcome(1, "gradient correctness", Kind::Property, pass, format!("max relative error {err:.2e}, {elapsed:.1?}"))
}

fn attention_invariants() -> Outcome {
    let (mut worst_sum, mut worst_shift): (f64, f64) = (0.0, 0.0);
    for seed in 0..ATTENTION_FIXTURES {
        let mut r = rng(seed);
        let nodes = r.gen_range(2..16);
        let edges = r.gen_range(1..40);
        let g = random_graph(&mut r, nodes, 2.min(nodes), 3, edges);
        let p = plan(&g);
        let params = random_params(model_config(&g, 1, 4, 2, 2, seed), &mut r, 1.5);
        let h0 = attribute_embed(&p, &params).unwrap();
        let (_, logits, weights) = propagate_layer(&p, &params, 1, &h0).unwrap();
        for (z, w) in logits.iter().zip(&weights) {
            for range in &p.edge_range {
                if !range.is_empty() {
                    worst_sum = worst_sum.max((w[range.clone()].iter().sum::<f64>() - 1.0).abs());
                }
            }
            let mut shifted = z.clone();
            for range in &p.edge_range {
                let offset = r.gen_range(-50.0..50.0);
                shifted[range.clone()].iter_mut().for_each(|x| *x += offset);
            }
            let moved = segment_softmax(&shifted, &p.offsets).unwrap();
            let diff = moved.iter().zip(w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst_shift = worst_shift.max(diff);
        }
    }
    let pass = worst_sum <= SUM_TOL && worst_shift <= SHIFT_TOL;
    let detail = format!("{ATTENTION_FIXTURES} fixtures, max |sum - 1| {worst_sum:.1e}, max shift change {worst_shift:.1e}");
    outcome(2, "attention invariants", Kind::Property, pass, detail)
}

/// Exhaustive enumeration of the corruption set in head-then-tail,
/// ascending-node order, built without the library's candidate index.
fn enumerate(positive: &Triple, g: &relgnn::graph::HeteroGraph, known: &HashSet<Triple>) -> Vec<Triple> {
    let mut out = Vec::new();
    for side in [Side::Head, Side::Tail] {
        let anchor = if side == Side::Head { positive.head } else { positive.tail };
        for n in (0..g.num_nodes()).filter(|&n| g.node_type(n) == g.node_type(anchor)) {
            let t = if side == Side::Head {
                Triple::new(n, positive.rel, positive.tail)
            } else {
                Triple::new(positive.head, positive.rel, n)
            };
            if !known.contains(&t) {
                out.push(t);
            }
        }
    }
    out
}

fn oracle_equivalence() -> Outcome {
    let (mut asa_agree, mut sa_agree, mut total) = (0, 0, 0);
    let mut seed = 0;
    while total < ORACLE_INSTANCES as usize {
        seed += 1;
        let mut r = rng(10_000 + seed);
        let nodes = r.gen_range(4..=30);
        let edges = r.gen_range(3..60);
        let g = random_graph(&mut r, nodes, 2, 3, edges);
        let known: HashSet<Triple> = g.edges().iter().copied().collect();
        let space = CorruptionSpace::new(&g, &known);
        let params = random_params(model_config(&g, 2, 4, 2, 2, seed), &mut r, 1.0);
        let scorer = Embeddings::compute(&plan(&g), &params).unwrap();
        let positive = g.edges()[r.gen_range(0..g.num_edges())];
        let pool = all_corruptions(&positive, &space);
        let candidates = enumerate(&positive, &g, &known);
        if candidates.is_empty() {
            continue;
        }
        total += 1;
        let mu = r.gen_range(0.0..0.5);
        let s_pos = scorer.score(&positive);
        let residual = |t: &Triple| (s_pos - scorer.score(t) - mu).abs();
        let mut best_asa = candidates[0];
        let mut best_sa = candidates[0];
        for t in &candidates[1..] {
            if residual(t) < residual(&best_asa) {
                best_asa = *t;
            }
            if scorer.score(t) > scorer.score(&best_sa) {
                best_sa = *t;
            }
        }
        asa_agree += usize::from(select_asa(&positive, &pool, &scorer, mu).unwrap().corrupted == best_asa);
        sa_agree += usize::from(select_self_adversarial(&pool, &scorer).unwrap().corrupted == best_sa);
    }
    let pass = asa_agree == total && sa_agree == total;
    let detail = format!("ASA {asa_agree}/{total}, self-adversarial {sa_agree}/{total}");
    outcome(3, "brute-force oracle equivalence", Kind::Property, pass, detail)
}

fn metric_oracles() -> Outcome {
    let mut mismatches = 0;
    for seed in 0..METRIC_FIXTURES {
        let mut r = rng(20_000 + seed);
        let n = r.gen_range(2..50);
        let levels = r.gen_range(2..10);
        let mut labels: Vec<bool> = (0..n).map(|_| r.gen_bool(0.5)).collect();
        labels[0] = true;
        labels[1] = false;
        let scores: Vec<f64> = (0..n).map(|_| r.gen_range(0..levels) as f64 / levels as f64).collect();
        let data = LabeledScores::new(scores.clone(), labels.clone()).unwrap();
        let ranks: Vec<usize> = (0..r.gen_range(1..40)).map(|_| r.gen_range(1..80)).collect();
        let cases: Vec<RankingCase> = ranks
            .iter()
            .map(|&rank| RankingCase { positive: Triple::new(0, 0, 1), side: Side::Tail, num_candidates: 80, rank })
            .collect();
        let exact = [
            roc_auc(&data).unwrap() == oracle::auc(&scores, &labels),
            average_precision(&data).unwrap() == oracle::average_precision(&scores, &labels),
            f1_at(&data, 0.5) == oracle::f1(&scores, &labels, 0.5),
            mrr(&cases) == oracle::mrr(&ranks),
            [1, 10, 30].iter().all(|&k| hit_at_k(&cases, k) == oracle::hit_at(&ranks, k)),
        ];
        mismatches += exact.iter().filter(|ok| !**ok).count();
    }
    let auc_case = LabeledScores::new(vec![0.9, 0.8, 0.3, 0.1], vec![true, false, true, false]).unwrap();
    let rank_case = |rank| RankingCase { positive: Triple::new(0, 0, 1), side: Side::Head, num_candidates: 9, rank };
    let worked_auc = roc_auc(&auc_case).unwrap();
    let worked_mrr = mrr(&[rank_case(1), rank_case(2), rank_case(4)]);
    let pass = mismatches == 0 && worked_auc == 0.75 && worked_mrr == (1.0 + 0.5 + 0.25) / 3.0;
    let detail = format!("{mismatches} mismatches over {METRIC_FIXTURES} fixtures; AUC {worked_auc}, MRR {worked_mrr:.4}");
    outcome(4, "metric oracles", Kind::Property, pass, detail)
}

fn asa_versus_random() -> Outcome {
    let spec = SyntheticSpec::default();
    let cfg = benchmark(0, &[]).unwrap();
    let start = Instant::now();
    let asa = seed_sweep(&SEEDS, &[("sampler.strategy", "asa")]).unwrap();
    let random = seed_sweep(&SEEDS, &[("sampler.strategy", "random")]).unwrap();
    let elapsed = start.elapsed();
    let (a, b) = (summarize(&asa, |r| r.mrr), summarize(&random, |r| r.mrr));
    let pooled = a.pooled_sd(&b);
    let pass = a.mean > b.mean && a.mean - b.mean > pooled && elapsed < COMPARISON_BUDGET;
    let detail = format!(
        "{} nodes, {} relations, {} edges, split {}/{}; test MRR ASA {a} vs random {b}, gap {:.4}, pooled sd {pooled:.4}, {elapsed:.1?}",
        spec.node_counts.iter().sum::<usize>(),
        spec.relations,
        spec.edges,
        cfg.split.train,
        cfg.split.valid,
        a.mean - b.mean,
    );
    outcome(5, "ASA beats random on test MRR", Kind::Replication, pass, detail)
}

fn false_negatives_versus_pool() -> Outcome {
    let sampler = |strategy, pool_size, mu| SamplerConfig { strategy, pool_size, mu, ..SamplerConfig::default() };
    let samplers = vec![
        ("SA10".to_string(), sampler(Strategy::SelfAdversarial, 10, 0.0)),
        ("SA100".to_string(), sampler(Strategy::SelfAdversarial, 100, 0.0)),
        ("SA500".to_string(), sampler(Strategy::SelfAdversarial, 500, 0.0)),
        ("ASA500".to_string(), sampler(Strategy::Asa, 500, 0.1)),
    ];
    let rows = false_negative_study(&SEEDS, &samplers, FN_ROUNDS).unwrap();
    let mean = |i: usize| rows.iter().map(|row| row.rates[i].1).sum::<f64>() / rows.len() as f64;
    let m: Vec<f64> = (0..samplers.len()).map(mean).collect();
    let pass = m[0] < m[1] && m[1] < m[2] && m[3] <= m[2];
    let detail = format!(
        "mean false-negative rate SA10 {:.4}, SA100 {:.4}, SA500 {:.4}, ASA500 {:.4}",
        m[0], m[1], m[2], m[3]
    );
    outcome(6, "false negatives grow with pool size", Kind::Property, pass, detail)
}

fn mu_sweep_shape() -> Outcome {
    let sweep = mu_sweep(&MUS, &SEEDS, 10).unwrap();
    let means: Vec<f64> = sweep.iter().map(|(_, s)| s.mean).collect();
    let top = (0..means.len()).fold(0, |best, i| if means[i] > means[best] { i } else { best });
    let last = means.len() - 1;
    let pass = top > 0 && top < last && means[top] > means[0] && means[top] > means[last];
    let table: Vec<String> = sweep.iter().map(|(mu, s)| format!("{mu}: {:.4}", s.mean)).collect();
    let detail = format!("mean Hit@10 by margin [{}], maximum at {}", table.join(", "), MUS[top]);
    outcome(7, "margin sweep has an interior maximum", Kind::Replication, pass, detail)
}

fn entropy_concentration() -> Outcome {
    let cfg = benchmark(0, &[("model.heads", "1")]).unwrap();
    let (data, trial) = run_trial(&cfg).unwrap();
    let rows = attention_entropy(&data.plan, &trial.fit.best).unwrap();
    let csv = entropy_csv(&rows);
    let eligible: Vec<_> = rows.iter().filter(|r| r.in_degree >= ENTROPY_MIN_DEGREE).collect();
    let concentrated =
        eligible.iter().filter(|r| r.entropy < ENTROPY_FRACTION * (r.in_degree as f64).ln()).count();
    let share = concentrated as f64 / eligible.len() as f64;
    let emitted = csv.lines().count() == rows.len() + 1;
    let pass = emitted && share > CONCENTRATED_SHARE;
    let detail = format!(
        "{concentrated}/{} (node, layer) rows with in-degree >= {ENTROPY_MIN_DEGREE} below {ENTROPY_FRACTION} ln(deg): {:.1}%",
        eligible.len(),
        100.0 * share
    );
    outcome(8, "attention concentrates", Kind::Replication, pass, detail)
}

fn ablation_seam() -> Outcome {
    // Attention off must be the plain in-degree mean.
    let g = relgnn::synthetic::generate_synthetic(&SyntheticSpec::default()).unwrap().graph;
    let p = plan(&g);
    let mut cfg = model_config(&g, 1, 4, 2, 2, 0);
    cfg.attention = false;
    let params = random_params(cfg, &mut rng(0), 1.0);
    let h0 = attribute_embed(&p, &params).unwrap();
    let (h1, ..) = propagate_layer(&p, &params, 1, &h0).unwrap();
    let rows: Vec<Vec<f64>> = (0..h0.rows()).map(|v| h0.row_slice(v).to_vec()).collect();
    let want = oracle::layer(&params, 0, &rows, &p.edges).states;
    let mean_ok = (0..h1.rows())
        .all(|v| h1.row_slice(v).iter().zip(&want[v]).all(|(a, b)| (a - b).abs() < 1e-10));

    let cells = ablation_grid(&SEEDS).unwrap();
    let table = ablation_table(&cells);
    let best = cells.iter().max_by(|a, b| a.auc.mean.total_cmp(&b.auc.mean)).unwrap();
    let pass = mean_ok
        && cells.len() == 4
        && best.attention
        && best.strategy == Strategy::Asa
        && cells.iter().filter(|c| c.auc.mean == best.auc.mean).count() == 1;
    let aucs: Vec<String> = cells
        .iter()
        .map(|c| format!("{}/{:?} {:.4}", if c.attention { "on" } else { "off" }, c.strategy, c.auc.mean))
        .collect();
    println!("{table}");
    outcome(9, "attention on with ASA has best AUC", Kind::Replication, pass, format!("mean test AUC {}", aucs.join(", ")))
}

fn determinism() -> Outcome {
    let cfg = benchmark(2, &[]).unwrap();
    let runs: Vec<_> = (0..2).map(|_| run_trial(&cfg).unwrap().1).collect();
    let same_report = runs[0].report.to_json() == runs[1].report.to_json();
    let same_log = log_jsonl(&runs[0].fit.log) == log_jsonl(&runs[1].fit.log);
    let pass = same_report && same_log && runs[0].fit.best == runs[1].fit.best;
    outcome(10, "determinism", Kind::Property, pass, format!("metrics JSON identical: {same_report}, log identical: {same_log}"))
}

fn main() {
    let strict = std::env::var("RELGNN_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let criteria: [fn() -> Outcome; 10] = [
        gradient_correctness,
        attention_invariants,
        oracle_equivalence,
        metric_oracles,
        asa_versus_random,
        false_negatives_versus_pool,
        mu_sweep_shape,
        entropy_concentration,
        ablation_seam,
        determinism,
    ];
    let mut failed_hard = false;
    for criterion in criteria {
        let o = criterion();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict}: {} ({})", o.id, o.name, o.detail);
        failed_hard |= !o.pass && (o.kind == Kind::Property || strict);
    }
    if failed_hard {
        std::process::exit(1);
    }
}
