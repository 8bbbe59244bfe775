//! The relation-aware attentive message-passing network.
//!
//! Node states are row vectors: a weight matrix `W` maps a state `h` to
//! `h · W`. Per-relation message matrices are never stored; each layer keeps
//! `B` basis matrices and an `|R| × B` coefficient table, and
//! `W_r = Σ_b c[r, b] · V_b` is rebuilt on every forward pass.

mod checkpoint;
mod diagnostics;
mod forward;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC};
pub use diagnostics::{attention_entropy, entropy, entropy_csv, EntropyRow};
pub use forward::{
    attribute_embed, bind, final_embedding, forward, propagate_layer, score_on_tape, Embeddings,
    Forward, GraphPlan, LayerOutput, LayerStates,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::HeteroGraph;
use crate::tensor::Tensor;

/// User-facing architecture knobs; graph-derived sizes are filled in by
/// [`ModelConfig::for_graph`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSettings {
    pub layers: usize,
    pub hidden: usize,
    pub heads: usize,
    pub bases: usize,
    pub slope: f64,
    /// When false, messages are weighted by `1 / in-degree` instead of
    /// learned attention.
    pub attention: bool,
    /// Initialisation seed.
    pub seed: u64,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            layers: 2,
            hidden: 16,
            heads: 2,
            bases: 2,
            slope: 0.2,
            attention: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub layers: usize,
    pub hidden: usize,
    pub heads: usize,
    pub bases: usize,
    pub slope: f64,
    pub attention: bool,
    pub relations: usize,
    pub input_dims: Vec<usize>,
    pub seed: u64,
}

impl ModelConfig {
    pub fn for_graph(settings: &ModelSettings, graph: &HeteroGraph) -> Result<Self> {
        let cfg = ModelConfig {
            layers: settings.layers,
            hidden: settings.hidden,
            heads: settings.heads,
            bases: settings.bases.min(graph.num_relations()).max(1),
            slope: settings.slope,
            attention: settings.attention,
            relations: graph.num_relations(),
            input_dims: graph.type_dims().to_vec(),
            seed: settings.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.layers == 0 || self.hidden == 0 || self.heads == 0 || self.bases == 0 {
            return bad("layers, hidden, heads and bases must be >= 1".into());
        }
        if self.relations == 0 {
            return bad("graph has no relation types".into());
        }
        if self.bases > self.relations {
            return bad(format!("bases {} exceed relation count {}", self.bases, self.relations));
        }
        if !(self.slope > 0.0 && self.slope < 1.0) {
            return bad(format!("leaky-relu slope {} outside (0, 1)", self.slope));
        }
        Ok(())
    }

    /// Relation-dependent parameter count of one layer: `B·d² + |R|·B`.
    pub fn layer_relation_params(&self) -> usize {
        self.bases * self.hidden * self.hidden + self.relations * self.bases
    }
}

/// Slot indices of one propagation layer's arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSlots {
    /// `B × d²`, row `b` is basis `V_b` flattened row-major.
    pub bases: usize,
    /// `|R| × B`.
    pub coeffs: usize,
    /// `d × d`.
    pub w_self: usize,
    /// One `3d × 1` vector per head.
    pub attention: Vec<usize>,
}

/// Where each named array lives in [`ModelParameters::arrays`].
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    /// `(U_k, b_k)` per node type: `input_dim_k × d` and `1 × d`.
    pub encoders: Vec<(usize, usize)>,
    pub layers: Vec<LayerSlots>,
    /// `|R| × d`: the relation states, also the DistMult diagonals.
    pub relation: usize,
    /// One `d × 1` fusion vector per head.
    pub fusion: Vec<usize>,
}

/// Array name and `(rows, cols)`.
type ArraySpec = (String, (usize, usize));

impl Layout {
    fn build(cfg: &ModelConfig) -> (Layout, Vec<ArraySpec>) {
        let d = cfg.hidden;
        let mut specs = Vec::new();
        let mut slot = |name: String, shape: (usize, usize)| {
            specs.push((name, shape));
            specs.len() - 1
        };
        let encoders = cfg
            .input_dims
            .iter()
            .enumerate()
            .map(|(k, &dim)| {
                (
                    slot(format!("encoder.{k}.weight"), (dim, d)),
                    slot(format!("encoder.{k}.bias"), (1, d)),
                )
            })
            .collect();
        let layers = (0..cfg.layers)
            .map(|t| LayerSlots {
                bases: slot(format!("layer.{t}.bases"), (cfg.bases, d * d)),
                coeffs: slot(format!("layer.{t}.coeffs"), (cfg.relations, cfg.bases)),
                w_self: slot(format!("layer.{t}.w_self"), (d, d)),
                attention: (0..cfg.heads)
                    .map(|l| slot(format!("layer.{t}.attention.{l}"), (3 * d, 1)))
                    .collect(),
            })
            .collect();
        let relation = slot("relation".into(), (cfg.relations, d));
        let fusion = (0..cfg.heads)
            .map(|l| slot(format!("fusion.{l}"), (d, 1)))
            .collect();
        (
            Layout {
                encoders,
                layers,
                relation,
                fusion,
            },
            specs,
        )
    }
}

/// Every learnable array of the model, addressed through its [`Layout`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    pub config: ModelConfig,
    pub layout: Layout,
    pub names: Vec<String>,
    pub arrays: Vec<Tensor>,
}

impl ModelParameters {
    /// Seeded initialisation: Glorot-uniform matrices and attention vectors,
    /// zero biases.
    pub fn init(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let (layout, specs) = Layout::build(&config);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let d = config.hidden;
        let mut arrays = Vec::with_capacity(specs.len());
        for (name, (rows, cols)) in &specs {
            let t = if name.ends_with(".bias") {
                Tensor::zeros(*rows, *cols)
            } else if name.ends_with(".bases") {
                let mut data = Vec::with_capacity(rows * cols);
                for _ in 0..*rows {
                    data.extend(Tensor::glorot(d, d, &mut rng).into_vec());
                }
                Tensor::from_vec(*rows, *cols, data)?
            } else {
                Tensor::glorot(*rows, *cols, &mut rng)
            };
            arrays.push(t);
        }
        Ok(ModelParameters {
            config,
            layout,
            names: specs.into_iter().map(|(n, _)| n).collect(),
            arrays,
        })
    }

    /// Rebuilds from stored arrays, checking names and shapes against the config.
    pub fn from_arrays(config: ModelConfig, named: Vec<(String, Tensor)>) -> Result<Self> {
        config.validate()?;
        let (layout, specs) = Layout::build(&config);
        if named.len() != specs.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} arrays, found {}",
                specs.len(),
                named.len()
            )));
        }
        let mut arrays = Vec::with_capacity(named.len());
        for ((name, t), (want, shape)) in named.into_iter().zip(&specs) {
            if &name != want || t.shape() != *shape {
                return Err(Error::Checkpoint(format!(
                    "array {name} {:?} does not match expected {want} {shape:?}",
                    t.shape()
                )));
            }
            arrays.push(t);
        }
        Ok(ModelParameters {
            config,
            layout,
            names: specs.into_iter().map(|(n, _)| n).collect(),
            arrays,
        })
    }

    pub fn num_params(&self) -> usize {
        self.arrays.iter().map(Tensor::len).sum()
    }

    /// Dense `d × d` message matrix of relation `r` at layer `t`.
    pub fn relation_matrix(&self, t: usize, r: usize) -> Tensor {
        let d = self.config.hidden;
        let slots = &self.layout.layers[t];
        let bases = &self.arrays[slots.bases];
        let coeffs = &self.arrays[slots.coeffs];
        let mut w = Tensor::zeros(d, d);
        for b in 0..self.config.bases {
            let c = coeffs.get(r, b);
            for (o, v) in w.data_mut().iter_mut().zip(bases.row_slice(b)) {
                *o += c * v;
            }
        }
        w
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.names.iter().position(|n| n == name).map(|i| &self.arrays[i])
    }
}
