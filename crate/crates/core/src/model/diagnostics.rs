use std::fmt::Write as _;

use crate::autodiff::Tape;
use crate::error::Result;
use crate::graph::NodeId;

use super::forward::{bind, forward, GraphPlan};
use super::ModelParameters;

/// Shannon entropy (natural log) of a distribution; zero weights contribute 0.
pub fn entropy(weights: &[f64]) -> f64 {
    -weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| w * w.ln())
        .sum::<f64>()
}

/// Attention entropy of one node at one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyRow {
    pub node: NodeId,
    /// 1-based layer index.
    pub layer: usize,
    pub in_degree: usize,
    /// Entropy of the head-averaged distribution applied to messages.
    pub entropy: f64,
    pub head_entropies: Vec<f64>,
}

/// One row per node with incoming edges, per layer. Empty when the model
/// runs without attention.
pub fn attention_entropy(plan: &GraphPlan, params: &ModelParameters) -> Result<Vec<EntropyRow>> {
    let tape = Tape::new();
    let vars = bind(params, &tape, false);
    let fwd = forward(plan, params, &vars, &tape)?;
    let mut rows = Vec::new();
    if !params.config.attention {
        return Ok(rows);
    }
    for (t, layer) in fwd.layers.iter().enumerate() {
        let Some(applied) = layer.applied else { continue };
        let applied = applied.value().data().to_vec();
        let heads: Vec<Vec<f64>> = layer.weights.iter().map(|w| w.value().data().to_vec()).collect();
        for &v in &plan.group_nodes {
            let span = plan.edge_range[v].clone();
            rows.push(EntropyRow {
                node: v,
                layer: t + 1,
                in_degree: span.len(),
                entropy: entropy(&applied[span.clone()]),
                head_entropies: heads.iter().map(|h| entropy(&h[span.clone()])).collect(),
            });
        }
    }
    Ok(rows)
}

/// `node_id,layer,in_degree,entropy` CSV with a header line.
pub fn entropy_csv(rows: &[EntropyRow]) -> String {
    let mut out = String::from("node_id,layer,in_degree,entropy\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.node, r.layer, r.in_degree, r.entropy);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_edge_cases() {
        assert_eq!(entropy(&[1.0]), 0.0);
        let k = 5;
        let uniform = vec![1.0 / k as f64; k];
        assert!((entropy(&uniform) - (k as f64).ln()).abs() < 1e-12);
        assert_eq!(entropy(&[0.0, 1.0]), 0.0);
    }
}
