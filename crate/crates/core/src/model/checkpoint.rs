//! Text checkpoint container.
//!
//! ```text
//! RELGNN-CHECKPOINT 1
//! config <ModelConfig as JSON>
//! meta <free-form JSON>
//! arrays <count>
//! <name> <rows> <cols>
//! <rows*cols space-separated floats>
//! ...
//! ```
//! Floats are written with Rust's shortest round-trip formatting, so a
//! save/load cycle is lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::{ModelConfig, ModelParameters};

pub const CHECKPOINT_MAGIC: &str = "RELGNN-CHECKPOINT";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParameters,
    /// Run context needed to rebuild the data view (split seed, paths, ...).
    pub meta: serde_json::Value,
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{CHECKPOINT_MAGIC} {VERSION}");
        let _ = writeln!(
            out,
            "config {}",
            serde_json::to_string(&self.params.config).expect("config serialises")
        );
        let _ = writeln!(out, "meta {}", self.meta);
        let _ = writeln!(out, "arrays {}", self.params.arrays.len());
        for (name, t) in self.params.names.iter().zip(&self.params.arrays) {
            let _ = writeln!(out, "{name} {} {}", t.rows(), t.cols());
            for (i, v) in t.data().iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{v:?}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Checkpoint(m);
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let mut parts = header.split_whitespace();
        if parts.next() != Some(CHECKPOINT_MAGIC) {
            return Err(bad("missing checkpoint magic".into()));
        }
        let version: u32 = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("missing version".into()))?;
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let field = |line: Option<&str>, key: &str| -> Result<String> {
            line.and_then(|l| l.strip_prefix(key))
                .and_then(|l| l.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| bad(format!("missing {key} line")))
        };
        let config: ModelConfig = serde_json::from_str(&field(lines.next(), "config")?)?;
        let meta: serde_json::Value = serde_json::from_str(&field(lines.next(), "meta")?)?;
        let count: usize = field(lines.next(), "arrays")?
            .trim()
            .parse()
            .map_err(|_| bad("bad array count".into()))?;
        let mut named = Vec::with_capacity(count);
        for _ in 0..count {
            let head = lines.next().ok_or_else(|| bad("truncated array header".into()))?;
            let f: Vec<&str> = head.split_whitespace().collect();
            if f.len() != 3 {
                return Err(bad(format!("bad array header {head:?}")));
            }
            let rows: usize = f[1].parse().map_err(|_| bad(format!("bad rows in {head:?}")))?;
            let cols: usize = f[2].parse().map_err(|_| bad(format!("bad cols in {head:?}")))?;
            let body = lines.next().ok_or_else(|| bad(format!("missing values for {}", f[0])))?;
            let values = body
                .split_whitespace()
                .map(|s| s.parse::<f64>().map_err(|_| bad(format!("bad value {s:?} in {}", f[0]))))
                .collect::<Result<Vec<f64>>>()?;
            let t = Tensor::from_vec(rows, cols, values)
                .map_err(|_| bad(format!("array {} has wrong value count", f[0])))?;
            named.push((f[0].to_string(), t));
        }
        Ok(Checkpoint {
            params: ModelParameters::from_arrays(config, named)?,
            meta,
        })
    }
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    fs::write(path, ckpt.to_text()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_text(&text)
}
