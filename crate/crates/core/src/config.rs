//! Run configuration: a sectioned `key = value` file (a TOML subset), command
//! line overrides, and seed derivation.
//!
//! ```text
//! seed = 3
//! out = "runs/demo"
//!
//! [data]              # either nodes + edges (+ heldout) ...
//! nodes = "graph/nodes.tsv"
//! edges = "graph/edges.tsv"
//!
//! [data.synthetic]    # ... or a generated graph
//! communities = 4
//!
//! [split]    train = 0.8, valid = 0.1
//! [model]    layers, hidden, heads, bases, slope, attention
//! [train]    epochs, lr, optimizer, batch_size, patience, ...
//! [sampler]  strategy, pool_size, mu, schedule, rate, negatives
//! [eval]     ks = [1, 10, 30], split = "test"
//! ```
//!
//! Unknown keys are rejected. Relative paths resolve against the directory
//! of the config file. Every `seed` left out of a section is derived from the
//! top-level seed with a fixed per-section label, and the resolved config
//! records all of them explicitly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::Value;

use crate::data::{Split, SplitConfig};
use crate::error::{Error, Result};
use crate::eval::DEFAULT_KS;
use crate::model::ModelSettings;
use crate::sampling::SamplerConfig;
use crate::seed;
use crate::synthetic::SyntheticSpec;
use crate::train::TrainConfig;

/// Sections whose `seed` key is derived from the top-level seed, with the
/// label used for derivation.
pub const SEED_LABELS: [(&str, &str); 5] = [
    ("data.synthetic", "synthetic"),
    ("split", "split"),
    ("model", "model"),
    ("train", "shuffle"),
    ("sampler", "sampler"),
];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub nodes: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    /// Known true edges absent from the graph, for false-negative tracking.
    pub heldout: Option<PathBuf>,
    /// Adds an inverse relation for every relation when loading files.
    pub add_reverse: bool,
    pub synthetic: Option<SyntheticSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub ks: Vec<usize>,
    pub split: Split,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            ks: DEFAULT_KS.to_vec(),
            split: Split::Test,
        }
    }
}

// Field-level defaults only: a container default would recurse through
// `Default for RunConfig`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub model: ModelSettings,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

fn default_out() -> PathBuf {
    PathBuf::from("runs")
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::from_value(Value::Table(Default::default()), None).expect("defaults resolve")
    }
}

impl RunConfig {
    /// Parses config text; `base` anchors relative paths.
    pub fn from_toml(text: &str, base: Option<&Path>) -> Result<Self> {
        Self::from_toml_with(text, base, &[])
    }

    /// Parses config text, then applies `overrides` before resolving.
    pub fn from_toml_with(text: &str, base: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut value: Value = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for (key, raw) in overrides {
            set_key(&mut value, key, parse_scalar(raw))?;
        }
        Self::from_value(value, base)
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_with(&text, path.parent(), overrides)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Defaults plus `overrides`, without a file.
    pub fn with_overrides(overrides: &[(String, String)]) -> Result<Self> {
        Self::from_toml_with("", None, overrides)
    }

    fn from_value(mut value: Value, base: Option<&Path>) -> Result<Self> {
        let table = value
            .as_table_mut()
            .ok_or_else(|| Error::Config("config root must be a table".into()))?;
        let top_seed = match table.get("seed") {
            None => 0,
            Some(Value::Integer(s)) if *s >= 0 => *s as u64,
            Some(other) => return Err(Error::Config(format!("seed must be a non-negative integer, got {other}"))),
        };
        table.insert("seed".into(), Value::Integer(top_seed as i64));

        let uses_files = table
            .get("data")
            .and_then(Value::as_table)
            .is_some_and(|d| d.contains_key("nodes") || d.contains_key("edges"));
        if !uses_files {
            ensure_table(&mut value, "data.synthetic")?;
        }
        for (section, label) in SEED_LABELS {
            if section == "data.synthetic" && uses_files {
                continue;
            }
            let t = ensure_table(&mut value, section)?;
            if !t.contains_key("seed") {
                let derived = seed::for_label(top_seed, label) >> 1;
                t.insert("seed".into(), Value::Integer(derived as i64));
            }
        }

        let mut cfg: RunConfig = value.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if let Some(base) = base {
            for p in [&mut cfg.data.nodes, &mut cfg.data.edges, &mut cfg.data.heldout]
                .into_iter()
                .flatten()
            {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.data;
        match (&d.nodes, &d.edges, &d.synthetic) {
            (Some(_), Some(_), None) | (None, None, Some(_)) => {}
            (Some(_), Some(_), Some(_)) => {
                return Err(Error::Config("data: give either nodes/edges or synthetic, not both".into()))
            }
            _ => return Err(Error::Config("data: nodes and edges must be given together".into())),
        }
        if d.heldout.is_some() && d.synthetic.is_some() {
            return Err(Error::Config("data.heldout only applies to file input".into()));
        }
        if let Some(spec) = &d.synthetic {
            spec.validate()?;
        }
        if self.eval.ks.is_empty() || self.eval.ks.contains(&0) {
            return Err(Error::Config("eval.ks must be non-empty and >= 1".into()));
        }
        self.train.validate()?;
        self.sampler.validate()
    }

    /// Training settings with the sampler section folded in.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            sampler: self.sampler.clone(),
            ..self.train.clone()
        }
    }

    /// Fully resolved text; loading it reproduces this config exactly.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serialises")
    }
}

fn ensure_table<'v>(value: &'v mut Value, dotted: &str) -> Result<&'v mut toml::Table> {
    let mut cur = value;
    for part in dotted.split('.') {
        let table = cur
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{dotted}: parent is not a section")))?;
        cur = table
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Default::default()));
    }
    cur.as_table_mut()
        .ok_or_else(|| Error::Config(format!("{dotted} must be a section")))
}

/// Sets `a.b.c = v`, creating sections as needed.
pub fn set_key(root: &mut Value, dotted: &str, v: Value) -> Result<()> {
    let (parent, leaf) = match dotted.rsplit_once('.') {
        Some((p, l)) => (Some(p), l),
        None => (None, dotted),
    };
    if leaf.is_empty() {
        return Err(Error::Config(format!("empty key in {dotted:?}")));
    }
    let table = match parent {
        Some(p) => ensure_table(root, p)?,
        None => root
            .as_table_mut()
            .ok_or_else(|| Error::Config("config root must be a table".into()))?,
    };
    table.insert(leaf.to_string(), v);
    Ok(())
}

/// Reads an override value as a TOML literal, falling back to a bare string.
/// A comma-separated list of integers becomes an array.
pub fn parse_scalar(raw: &str) -> Value {
    if let Ok(Value::Table(t)) = toml::from_str::<Value>(&format!("v = {raw}")) {
        if let Some(v) = t.get("v") {
            return v.clone();
        }
    }
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    if parts.len() > 1 {
        if let Ok(ints) = parts.iter().map(|p| p.parse::<i64>()).collect::<std::result::Result<Vec<_>, _>>() {
            return Value::Array(ints.into_iter().map(Value::Integer).collect());
        }
    }
    Value::String(raw.to_string())
}

/// Splits `--key value` pairs; every key must start with `--`.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    if !args.len().is_multiple_of(2) {
        return Err(Error::Config(format!(
            "overrides must come in --key value pairs, got {args:?}"
        )));
    }
    args.chunks(2)
        .map(|pair| match pair[0].strip_prefix("--") {
            Some(key) if !key.is_empty() => Ok((key.to_string(), pair[1].clone())),
            _ => Err(Error::Config(format!("expected --key, got {:?}", pair[0]))),
        })
        .collect()
}
