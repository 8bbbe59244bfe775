//! Relationship prediction on attributed heterogeneous graphs.
//!
//! The crate bundles a relation-aware attentive message-passing encoder with
//! a DistMult scorer, an adaptive self-adversarial (ASA) negative sampler, a
//! small reverse-mode autodiff engine that both are built on, and the
//! evaluation protocol (ROC-AUC, average precision, F1, filtered MRR and
//! Hit@k).
//!
//! ```no_run
//! use relgnn::prelude::*;
//!
//! let synth = generate_synthetic(&SyntheticSpec::default()).unwrap();
//! let data = Dataset::new(synth.graph, synth.held_out, &SplitConfig::default()).unwrap();
//! let model = ModelConfig::for_graph(&ModelSettings::default(), &data.graph).unwrap();
//! let fit = fit(&data, model, &TrainConfig::default()).unwrap();
//! let report = data.evaluate(&fit.best, Split::Test, &DEFAULT_KS).unwrap();
//! println!("{}", report.to_json());
//! ```

// `!(x >= 0.0)` rejects NaN along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod graph;
pub mod model;
pub mod sampling;
pub mod seed;
pub mod synthetic;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::config::RunConfig;
    pub use crate::data::{Dataset, Split, SplitConfig};
    pub use crate::error::{Error, Result};
    pub use crate::eval::{MetricsReport, DEFAULT_KS};
    pub use crate::graph::{load_graph, HeteroGraph, LoadOptions, Triple};
    pub use crate::model::{ModelConfig, ModelParameters, ModelSettings};
    pub use crate::sampling::{SamplerConfig, Schedule, Strategy};
    pub use crate::synthetic::{generate_synthetic, SyntheticSpec};
    pub use crate::tensor::Tensor;
    pub use crate::train::{fit, TrainConfig};
}
