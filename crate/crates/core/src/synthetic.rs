//! Seeded community-structured graphs for tests and benchmarks.
//!
//! Every node belongs to a latent community and sits at a latent position on
//! a unit circle. Relation `r` connects nodes of type `r % T` to nodes of
//! type `(r / T + r) % T`. A non-noise edge picks its source uniformly and
//! its target among same-community nodes of the target type, weighted by
//! `exp(-locality * circular_distance)`. Noise edges pick both endpoints
//! uniformly by type. Attributes are a one-hot community indicator, plus
//! `position_signal * (cos, sin)` of the latent angle in the last two
//! dimensions, plus Gaussian perturbation.

use std::collections::HashSet;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{HeteroGraph, NodeId, NodeTypeId, RelationTypeId, Triple};

/// Fraction of generated positives withheld from the graph.
pub const HELD_OUT_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    /// Node count for each node type.
    pub node_counts: Vec<usize>,
    /// Attribute dimensionality for each node type.
    pub attr_dims: Vec<usize>,
    pub relations: usize,
    /// Total positive edges generated, held-out ones included; spread evenly
    /// over relations.
    pub edges: usize,
    pub communities: usize,
    /// Fraction of edges whose endpoints ignore community structure.
    pub noise: f64,
    /// Standard deviation of the Gaussian attribute perturbation.
    pub attr_noise: f64,
    /// Preference for close latent positions within a community; 0 disables.
    pub locality: f64,
    /// Amplitude of the latent position encoded in the last two attribute
    /// dimensions; 0 leaves position recoverable from topology only.
    pub position_signal: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            node_counts: vec![100, 100],
            attr_dims: vec![16, 16],
            relations: 3,
            edges: 1000,
            communities: 4,
            noise: 0.05,
            attr_noise: 0.5,
            locality: 12.0,
            position_signal: 1.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticGraph {
    pub graph: HeteroGraph,
    /// True edges never placed in the graph.
    pub held_out: Vec<Triple>,
    pub communities: Vec<usize>,
    pub positions: Vec<f64>,
}

impl SyntheticSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SyntheticSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.node_counts.is_empty() || self.node_counts.contains(&0) {
            return bad("node_counts must be non-empty and all >= 1");
        }
        if self.attr_dims.len() != self.node_counts.len() {
            return bad("attr_dims must have one entry per node type");
        }
        if self.attr_dims.contains(&0) {
            return bad("attr_dims must all be >= 1");
        }
        if self.relations == 0 || self.edges == 0 || self.communities == 0 {
            return bad("relations, edges and communities must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return bad("noise must lie in [0, 1]");
        }
        if !(self.attr_noise >= 0.0) || !(self.locality >= 0.0) || !(self.position_signal >= 0.0) {
            return bad("attr_noise, locality and position_signal must be >= 0");
        }
        if self.position_signal > 0.0 && self.attr_dims.iter().any(|&d| d < self.communities + 2) {
            return bad("position_signal needs attr_dims >= communities + 2");
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.node_counts.iter().sum()
    }

    pub fn relation_types(&self, r: RelationTypeId) -> (NodeTypeId, NodeTypeId) {
        let t = self.node_counts.len();
        (r % t, (r / t + r) % t)
    }

    fn edges_for_relation(&self, r: RelationTypeId) -> usize {
        self.edges / self.relations + usize::from(r < self.edges % self.relations)
    }
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(1.0 - d)
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; one draw per call keeps the stream layout simple.
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Generates the graph and its held-out positives; identical specs yield
/// identical output.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticGraph> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let num_types = spec.node_counts.len();
    let k = spec.communities;

    let mut node_types = Vec::with_capacity(spec.num_nodes());
    let mut by_type: Vec<Vec<NodeId>> = vec![Vec::new(); num_types];
    for (t, &count) in spec.node_counts.iter().enumerate() {
        for _ in 0..count {
            by_type[t].push(node_types.len());
            node_types.push(t);
        }
    }
    let n = node_types.len();

    // Balanced community assignment within each type.
    let mut communities = vec![0; n];
    for nodes in &by_type {
        let mut order = nodes.clone();
        order.shuffle(&mut rng);
        for (i, &v) in order.iter().enumerate() {
            communities[v] = i % k;
        }
    }
    let positions: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();

    let attributes: Vec<Vec<f64>> = (0..n)
        .map(|v| {
            let dim = spec.attr_dims[node_types[v]];
            let angle = 2.0 * std::f64::consts::PI * positions[v];
            (0..dim)
                .map(|j| {
                    let signal = if spec.position_signal > 0.0 && j + 2 >= dim {
                        let trig = if j + 2 == dim { angle.cos() } else { angle.sin() };
                        spec.position_signal * trig
                    } else if j == communities[v] % dim {
                        1.0
                    } else {
                        0.0
                    };
                    signal + spec.attr_noise * gaussian(&mut rng)
                })
                .collect()
        })
        .collect();

    // members[t][c] = nodes of type t in community c.
    let mut members = vec![vec![Vec::new(); k]; num_types];
    for v in 0..n {
        members[node_types[v]][communities[v]].push(v);
    }

    let mut all = Vec::with_capacity(spec.edges);
    let mut seen = HashSet::with_capacity(spec.edges);
    for r in 0..spec.relations {
        let want = spec.edges_for_relation(r);
        let (src_t, dst_t) = spec.relation_types(r);
        let same = src_t == dst_t;
        let pair_count = |a: usize, b: usize| if same { a * b - a.min(b) } else { a * b };
        let intra: usize = (0..k)
            .map(|c| {
                let a = members[src_t][c].len();
                let b = members[dst_t][c].len();
                if same { a * a.saturating_sub(1) } else { a * b }
            })
            .sum();
        let total = pair_count(by_type[src_t].len(), by_type[dst_t].len());
        let feasible = if spec.noise == 0.0 { intra } else { total };
        let needs_intra = spec.noise < 1.0;
        if want > feasible || (needs_intra && intra == 0) {
            return Err(Error::Infeasible(format!(
                "relation {r} needs {want} distinct edges but only {feasible} are possible"
            )));
        }
        let sources: Vec<NodeId> = by_type[src_t]
            .iter()
            .copied()
            .filter(|&u| {
                let c = communities[u];
                members[dst_t][c].iter().any(|&v| v != u)
            })
            .collect();

        let mut made = 0;
        let mut attempts = 0usize;
        let budget = 1000 * want.max(1) + 100_000;
        while made < want {
            attempts += 1;
            if attempts > budget {
                return Err(Error::Infeasible(format!(
                    "relation {r}: could not place {want} distinct edges"
                )));
            }
            let noisy = spec.noise > 0.0 && rng.gen::<f64>() < spec.noise;
            let (u, v) = if noisy {
                let u = *by_type[src_t].choose(&mut rng).expect("non-empty type");
                let v = *by_type[dst_t].choose(&mut rng).expect("non-empty type");
                (u, v)
            } else {
                let u = *sources.choose(&mut rng).expect("checked intra > 0");
                let cands: Vec<NodeId> = members[dst_t][communities[u]]
                    .iter()
                    .copied()
                    .filter(|&v| v != u)
                    .collect();
                let weights: Vec<f64> = cands
                    .iter()
                    .map(|&v| (-spec.locality * circular_distance(positions[u], positions[v])).exp())
                    .collect();
                let pick = WeightedIndex::new(&weights).expect("positive weights");
                (u, cands[pick.sample(&mut rng)])
            };
            if u == v {
                continue;
            }
            let t = Triple::new(u, r, v);
            if seen.insert(t) {
                all.push(t);
                made += 1;
            }
        }
    }

    all.shuffle(&mut rng);
    let n_held = (all.len() as f64 * HELD_OUT_FRACTION).round() as usize;
    let graph_edges = all.split_off(n_held);
    let held_out = all;
    let graph = HeteroGraph::new(
        spec.attr_dims.clone(),
        node_types,
        attributes,
        spec.relations,
        graph_edges,
    )?;
    Ok(SyntheticGraph {
        graph,
        held_out,
        communities,
        positions,
    })
}
