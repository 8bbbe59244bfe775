use std::rc::Rc;

use crate::autodiff::{sigmoid_scalar, Indices, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::{HeteroGraph, NodeId, Triple};
use crate::sampling::TripleScorer;
use crate::tensor::Tensor;

use super::{LayerSlots, ModelParameters};

fn indices(v: Vec<usize>) -> Indices {
    Rc::from(v)
}

/// Index tables for one propagation graph, built once and reused by every
/// forward pass. Incoming edges are ordered by `(dst, relation, src)` so that
/// each destination's edges form one contiguous softmax group.
#[derive(Debug, Clone)]
pub struct GraphPlan {
    pub num_nodes: usize,
    pub num_relations: usize,
    /// Incoming edges in group order.
    pub edges: Vec<Triple>,
    /// `rel * n + src` per edge, indexing the stacked per-relation messages.
    stacked: Indices,
    rel: Indices,
    dst: Indices,
    /// Softmax group boundaries, one group per node with in-degree > 0.
    pub offsets: Indices,
    /// Node owning each group.
    pub group_nodes: Vec<NodeId>,
    /// `edge_range[v]` is the slice of `edges` entering `v`.
    pub edge_range: Vec<std::ops::Range<usize>>,
    /// `1 / in-degree(dst)` per edge, the attention-free weighting.
    mean_weights: Tensor,
    /// Attribute matrix per node type (rows in node order within the type).
    type_attributes: Vec<Tensor>,
    /// Row of node `v` in the concatenation of per-type embedding blocks.
    type_perm: Indices,
    input_dims: Vec<usize>,
}

impl GraphPlan {
    pub fn new(graph: &HeteroGraph) -> Self {
        let n = graph.num_nodes();
        let num_relations = graph.num_relations();
        let mut edges = graph.edges().to_vec();
        edges.sort_by_key(|e| (e.tail, e.rel, e.head));

        let mut edge_range = vec![0..0; n];
        let mut offsets = vec![0];
        let mut group_nodes = Vec::new();
        let mut start = 0;
        while start < edges.len() {
            let v = edges[start].tail;
            let mut end = start;
            while end < edges.len() && edges[end].tail == v {
                end += 1;
            }
            edge_range[v] = start..end;
            offsets.push(end);
            group_nodes.push(v);
            start = end;
        }
        let mean_weights = Tensor::column(
            &edges
                .iter()
                .map(|e| 1.0 / edge_range[e.tail].len() as f64)
                .collect::<Vec<_>>(),
        );

        let mut type_perm = vec![0; n];
        let mut type_attributes = Vec::new();
        let mut row = 0;
        for k in 0..graph.num_node_types() {
            let nodes = graph.nodes_of_type(k);
            let dim = graph.type_dims()[k];
            let mut data = Vec::with_capacity(nodes.len() * dim);
            for &v in nodes {
                type_perm[v] = row;
                row += 1;
                data.extend_from_slice(graph.attributes(v));
            }
            type_attributes.push(Tensor::from_vec(nodes.len(), dim, data).expect("schema checked"));
        }

        GraphPlan {
            num_nodes: n,
            num_relations,
            stacked: indices(edges.iter().map(|e| e.rel * n + e.head).collect()),
            rel: indices(edges.iter().map(|e| e.rel).collect()),
            dst: indices(edges.iter().map(|e| e.tail).collect()),
            offsets: indices(offsets),
            group_nodes,
            edge_range,
            mean_weights,
            type_attributes,
            type_perm: indices(type_perm),
            input_dims: graph.type_dims().to_vec(),
            edges,
        }
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn in_degree(&self, v: NodeId) -> usize {
        self.edge_range[v].len()
    }

    fn check(&self, params: &ModelParameters) -> Result<()> {
        let cfg = &params.config;
        if cfg.input_dims != self.input_dims || cfg.relations != self.num_relations {
            return Err(Error::Config(format!(
                "model expects input dims {:?} and {} relations, graph has {:?} and {}",
                cfg.input_dims, cfg.relations, self.input_dims, self.num_relations
            )));
        }
        Ok(())
    }
}

/// Records every parameter array on `tape`.
pub fn bind<'t>(params: &ModelParameters, tape: &'t Tape, trainable: bool) -> Vec<Var<'t>> {
    params
        .arrays
        .iter()
        .map(|a| {
            if trainable {
                tape.param(a.clone())
            } else {
                tape.constant(a.clone())
            }
        })
        .collect()
}

/// Per-layer intermediate values.
pub struct LayerOutput<'t> {
    /// Activated attention logits per head, one row per plan edge.
    pub logits: Vec<Var<'t>>,
    /// Normalised attention per head.
    pub weights: Vec<Var<'t>>,
    /// Weights actually applied to messages (head mean, or `1/deg`).
    pub applied: Option<Var<'t>>,
    pub states: Var<'t>,
}

pub struct Forward<'t> {
    pub h0: Var<'t>,
    pub layers: Vec<LayerOutput<'t>>,
    pub final_states: Var<'t>,
    pub relation: Var<'t>,
}

fn embed_on_tape<'t>(plan: &GraphPlan, params: &ModelParameters, vars: &[Var<'t>], tape: &'t Tape) -> Result<Var<'t>> {
    let mut blocks = Vec::new();
    for (k, &(w, b)) in params.layout.encoders.iter().enumerate() {
        let x = &plan.type_attributes[k];
        if x.rows() == 0 {
            continue;
        }
        let x = tape.constant(x.clone());
        blocks.push(x.matmul(vars[w])?.add_row(vars[b])?);
    }
    let stacked = Var::concat_rows(&blocks)?;
    Ok(stacked.gather_rows(&plan.type_perm)?.leaky_relu(params.config.slope))
}

fn range(start: usize, len: usize) -> Indices {
    indices((start..start + len).collect())
}

fn layer_on_tape<'t>(
    plan: &GraphPlan,
    params: &ModelParameters,
    slots: &LayerSlots,
    vars: &[Var<'t>],
    h: Var<'t>,
) -> Result<LayerOutput<'t>> {
    let cfg = &params.config;
    let d = cfg.hidden;
    let tape = h.tape();

    let s = h.matmul(vars[slots.w_self])?;
    if plan.num_edges() == 0 {
        return Ok(LayerOutput {
            logits: Vec::new(),
            weights: Vec::new(),
            applied: None,
            states: s.leaky_relu(cfg.slope),
        });
    }

    let all_w = vars[slots.coeffs].matmul(vars[slots.bases])?;
    let per_relation = (0..cfg.relations)
        .map(|r| {
            let w_r = all_w.gather_rows(&range(r, 1))?.reshape(d, d)?;
            h.matmul(w_r)
        })
        .collect::<Result<Vec<_>>>()?;
    let messages = Var::concat_rows(&per_relation)?.gather_rows(&plan.stacked)?;
    debug_assert_eq!(messages.shape(), (plan.num_edges(), d));

    let relation = vars[params.layout.relation];
    let mut logits = Vec::with_capacity(cfg.heads);
    let mut weights = Vec::with_capacity(cfg.heads);
    let heads: &[usize] = if cfg.attention { &slots.attention } else { &[] };
    for &slot in heads {
        let a = vars[slot];
        let a_self = a.gather_rows(&range(0, d))?;
        let a_rel = a.gather_rows(&range(d, d))?;
        let a_msg = a.gather_rows(&range(2 * d, d))?;
        let self_part = s.matmul(a_self)?.gather_rows(&plan.dst)?;
        let rel_part = relation.matmul(a_rel)?.gather_rows(&plan.rel)?;
        let msg_part = messages.matmul(a_msg)?;
        let z = self_part.add(rel_part)?.add(msg_part)?.leaky_relu(cfg.slope);
        weights.push(z.masked_softmax(&plan.offsets)?);
        logits.push(z);
    }

    let applied = if cfg.attention {
        let mut sum = weights[0];
        for &w in &weights[1..] {
            sum = sum.add(w)?;
        }
        if weights.len() > 1 {
            sum.scale(1.0 / weights.len() as f64)
        } else {
            sum
        }
    } else {
        tape.constant(plan.mean_weights.clone())
    };
    let aggregated = messages
        .mul_col(applied)?
        .scatter_add_rows(&plan.dst, plan.num_nodes)?;
    let states = aggregated.add(s)?.leaky_relu(cfg.slope);
    Ok(LayerOutput {
        logits,
        weights,
        applied: Some(applied),
        states,
    })
}

fn fuse_on_tape<'t>(params: &ModelParameters, vars: &[Var<'t>], h0: Var<'t>, last: Var<'t>) -> Result<Var<'t>> {
    let slope = params.config.slope;
    let mut alpha_sum: Option<Var<'t>> = None;
    for &f in &params.layout.fusion {
        let z0 = h0.matmul(vars[f])?.leaky_relu(slope);
        let zl = last.matmul(vars[f])?.leaky_relu(slope);
        // Two-way softmax: α_attr = σ(z0 - zl).
        let alpha = z0.sub(zl)?.sigmoid();
        alpha_sum = Some(match alpha_sum {
            Some(s) => s.add(alpha)?,
            None => alpha,
        });
    }
    let heads = params.layout.fusion.len();
    let alpha = alpha_sum.expect("at least one head").scale(1.0 / heads as f64);
    last.add(h0.sub(last)?.mul_col(alpha)?)
}

/// Full forward pass on `tape`, parameters already bound with [`bind`].
pub fn forward<'t>(plan: &GraphPlan, params: &ModelParameters, vars: &[Var<'t>], tape: &'t Tape) -> Result<Forward<'t>> {
    plan.check(params)?;
    let h0 = embed_on_tape(plan, params, vars, tape)?;
    let mut h = h0;
    let mut layers = Vec::with_capacity(params.layout.layers.len());
    for slots in &params.layout.layers {
        let out = layer_on_tape(plan, params, slots, vars, h)?;
        h = out.states;
        layers.push(out);
    }
    let final_states = fuse_on_tape(params, vars, h0, h)?;
    Ok(Forward {
        h0,
        layers,
        final_states,
        relation: vars[params.layout.relation],
    })
}

/// DistMult probabilities `σ(Σ_k h_i[k] · h_r[k] · h_j[k])` for a batch of triples.
pub fn score_on_tape<'t>(final_states: Var<'t>, relation: Var<'t>, triples: &[Triple]) -> Result<Var<'t>> {
    let heads = indices(triples.iter().map(|t| t.head).collect());
    let tails = indices(triples.iter().map(|t| t.tail).collect());
    let rels = indices(triples.iter().map(|t| t.rel).collect());
    let hi = final_states.gather_rows(&heads)?;
    let hj = final_states.gather_rows(&tails)?;
    let hr = relation.gather_rows(&rels)?;
    Ok(hi.elementwise_mul(hr)?.elementwise_mul(hj)?.sum_rows().sigmoid())
}

/// Attribute embeddings `h^(0)`: `leaky_relu(attr · U_k + b_k)` per node.
pub fn attribute_embed(plan: &GraphPlan, params: &ModelParameters) -> Result<Tensor> {
    plan.check(params)?;
    let tape = Tape::new();
    let vars = bind(params, &tape, false);
    let h0 = embed_on_tape(plan, params, &vars, &tape)?;
    let out = h0.value().clone();
    Ok(out)
}

/// New states, then per-head attention logits and weights aligned with
/// [`GraphPlan::edges`]; both lists are empty when attention is off.
pub type LayerStates = (Tensor, Vec<Vec<f64>>, Vec<Vec<f64>>);

/// One propagation step from the states of layer `t - 1` (`t` is 1-based).
pub fn propagate_layer(
    plan: &GraphPlan,
    params: &ModelParameters,
    t: usize,
    states: &Tensor,
) -> Result<LayerStates> {
    plan.check(params)?;
    if t == 0 || t > params.layout.layers.len() {
        return Err(Error::OutOfRange(format!(
            "layer {t} of {}",
            params.layout.layers.len()
        )));
    }
    let tape = Tape::new();
    let vars = bind(params, &tape, false);
    let h = tape.constant(states.clone());
    let out = layer_on_tape(plan, params, &params.layout.layers[t - 1], &vars, h)?;
    let logits = out.logits.iter().map(|v| v.value().data().to_vec()).collect();
    let weights = out.weights.iter().map(|v| v.value().data().to_vec()).collect();
    let states = out.states.value().clone();
    Ok((states, logits, weights))
}

/// Self-attentive fusion of the attribute and last-layer states.
pub fn final_embedding(params: &ModelParameters, h0: &Tensor, last: &Tensor) -> Result<Tensor> {
    let tape = Tape::new();
    let vars = bind(params, &tape, false);
    let out = fuse_on_tape(params, &vars, tape.constant(h0.clone()), tape.constant(last.clone()))?;
    let value = out.value().clone();
    Ok(value)
}

/// Frozen final embeddings and relation diagonals; scores triples without a tape.
#[derive(Debug, Clone)]
pub struct Embeddings {
    pub nodes: Tensor,
    pub relation: Tensor,
}

impl Embeddings {
    pub fn compute(plan: &GraphPlan, params: &ModelParameters) -> Result<Self> {
        let tape = Tape::new();
        let vars = bind(params, &tape, false);
        let fwd = forward(plan, params, &vars, &tape)?;
        let nodes = fwd.final_states.value().clone();
        let relation = fwd.relation.value().clone();
        Ok(Embeddings { nodes, relation })
    }

    pub fn logit(&self, t: &Triple) -> f64 {
        let hi = self.nodes.row_slice(t.head);
        let hj = self.nodes.row_slice(t.tail);
        let hr = self.relation.row_slice(t.rel);
        hi.iter().zip(hr).zip(hj).map(|((a, b), c)| a * b * c).sum()
    }

    pub fn probability(&self, t: &Triple) -> f64 {
        sigmoid_scalar(self.logit(t))
    }
}

impl TripleScorer for Embeddings {
    fn score(&self, t: &Triple) -> f64 {
        self.probability(t)
    }
}
