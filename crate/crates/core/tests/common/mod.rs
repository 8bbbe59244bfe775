#![allow(dead_code)]

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relgnn::graph::{HeteroGraph, Triple};
use relgnn::model::{GraphPlan, ModelConfig, ModelParameters};
use relgnn::tensor::Tensor;
use relgnn::train::loss_and_gradients;

/// Random heterogeneous graph: `types` node types with dims `2 + k`, every
/// relation between random type pairs, `edges` distinct triples.
pub fn random_graph(rng: &mut ChaCha8Rng, nodes: usize, types: usize, relations: usize, edges: usize) -> HeteroGraph {
    let node_types: Vec<usize> = (0..nodes).map(|v| if v < types { v } else { rng.gen_range(0..types) }).collect();
    let dims: Vec<usize> = (0..types).map(|k| 2 + k).collect();
    let attributes: Vec<Vec<f64>> = node_types
        .iter()
        .map(|&k| (0..dims[k]).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let mut seen = HashSet::new();
    let mut list = Vec::new();
    let mut attempts = 0;
    while list.len() < edges && attempts < edges * 100 {
        attempts += 1;
        let t = Triple::new(rng.gen_range(0..nodes), rng.gen_range(0..relations), rng.gen_range(0..nodes));
        if t.head != t.tail && seen.insert(t) {
            list.push(t);
        }
    }
    HeteroGraph::new(dims, node_types, attributes, relations, list).expect("valid random graph")
}

pub fn model_config(graph: &HeteroGraph, layers: usize, hidden: usize, heads: usize, bases: usize, seed: u64) -> ModelConfig {
    ModelConfig {
        layers,
        hidden,
        heads,
        bases,
        slope: 0.2,
        attention: true,
        relations: graph.num_relations(),
        input_dims: graph.type_dims().to_vec(),
        seed,
    }
}

/// Parameters drawn uniformly from `[-scale, scale]`, biases included.
pub fn random_params(cfg: ModelConfig, rng: &mut ChaCha8Rng, scale: f64) -> ModelParameters {
    let mut p = ModelParameters::init(cfg).expect("valid config");
    for a in &mut p.arrays {
        *a = Tensor::uniform(a.rows(), a.cols(), -scale, scale, rng);
    }
    p
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn plan(graph: &HeteroGraph) -> GraphPlan {
    GraphPlan::new(graph)
}

pub mod oracle;

pub const FD_STEP: f64 = 1e-5;

/// Largest relative error of analytic against central-difference gradients
/// over every entry of every parameter array.
pub fn max_gradient_error(seed: u64, attention: bool) -> f64 {
    let mut r = rng(seed);
    let graph = random_graph(&mut r, 8, 2, 3, 16);
    let mut cfg = model_config(&graph, 2, 4, 2, 2, seed);
    cfg.attention = attention;
    let params = random_params(cfg, &mut r, 0.8);
    let plan = plan(&graph);
    let positives: Vec<Triple> = graph.edges()[..4].to_vec();
    let negatives = vec![
        Triple::new(positives[0].head, positives[0].rel, positives[1].tail),
        Triple::new(positives[2].tail, positives[2].rel, positives[3].head),
        Triple::new(positives[1].head, positives[1].rel, positives[0].head),
        Triple::new(positives[3].tail, positives[3].rel, positives[2].tail),
    ];
    let (_, grads) = loss_and_gradients(&params, &plan, &positives, &negatives).unwrap();
    let mut worst: f64 = 0.0;
    for (i, array) in params.arrays.iter().enumerate() {
        for k in 0..array.len() {
            let at = |delta: f64| {
                let mut p = params.clone();
                p.arrays[i].data_mut()[k] += delta;
                loss_and_gradients(&p, &plan, &positives, &negatives).unwrap().0
            };
            let numeric = (at(FD_STEP) - at(-FD_STEP)) / (2.0 * FD_STEP);
            let analytic = grads[i].as_ref().map_or(0.0, |g| g.data()[k]);
            let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(err);
        }
    }
    worst
}


pub fn fixture_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// The bundled 50-node graph.
pub fn fixture_graph() -> HeteroGraph {
    let dir = fixture_dir().join("graph");
    relgnn::graph::load_graph(&dir.join("nodes.tsv"), &dir.join("edges.tsv"), Default::default())
        .expect("fixture graph loads")
}
