//! Command-line front end: `generate`, `train`, `evaluate`, `diagnose`.
//!
//! Every command reads a [`RunConfig`] (`--config`, or defaults), applies
//! `--seed`, `--out` and any trailing `--section.key value` overrides, and
//! writes its artifacts plus `resolved.toml` under the output directory.
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::config::{parse_overrides, RunConfig};
use crate::data::{Split, SplitConfig};
use crate::error::{Error, Result};
use crate::experiment::load_dataset;
use crate::graph::edges_tsv;
use crate::model::{attention_entropy, entropy_csv, load_checkpoint, save_checkpoint, Checkpoint, ModelConfig};
use crate::synthetic::generate_synthetic;
use crate::train::{fit, log_jsonl};

#[derive(Debug, Parser)]
#[command(name = "relgnn", version, about = "Relationship prediction on heterogeneous graphs")]
pub struct Cli {
    /// Run configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Top-level seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic graph as nodes.tsv, edges.tsv and heldout.tsv.
    Generate {
        /// `--section.key value` config overrides.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
        overrides: Vec<String>,
    },
    /// Train and write best.ckpt, train_log.jsonl and resolved.toml.
    Train {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
        overrides: Vec<String>,
    },
    /// Print a metrics report as JSON and write metrics_<split>.json.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Defaults to `eval.split` from the config.
        #[arg(long)]
        split: Option<Split>,
        /// Hit@k cutoffs, comma separated; defaults to `eval.ks`.
        #[arg(long = "k", value_delimiter = ',')]
        ks: Option<Vec<usize>>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
        overrides: Vec<String>,
    },
    /// Write per-node attention entropies to attention_entropy.csv.
    Diagnose {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
        overrides: Vec<String>,
    },
}

/// Parses `args` (program name first), runs the command, and returns the
/// process exit code. Messages go to stderr, reports to stdout.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate { overrides } => generate(&resolve(cli, overrides)?),
        Command::Train { overrides } => train(&resolve(cli, overrides)?),
        Command::Evaluate {
            checkpoint,
            split,
            ks,
            overrides,
        } => {
            let mut cfg = resolve(cli, overrides)?;
            if let Some(split) = split {
                cfg.eval.split = *split;
            }
            if let Some(ks) = ks {
                cfg.eval.ks = ks.clone();
                cfg.validate()?;
            }
            let report = evaluate(&cfg, checkpoint)?;
            println!("{report}");
            Ok(())
        }
        Command::Diagnose { checkpoint, overrides } => diagnose(&resolve(cli, overrides)?, checkpoint),
    }
}

/// Loads the config and applies global flags and overrides.
pub fn resolve(cli: &Cli, overrides: &[String]) -> Result<RunConfig> {
    let mut pairs = parse_overrides(overrides)?;
    if let Some(seed) = cli.seed {
        pairs.insert(0, ("seed".to_string(), seed.to_string()));
    }
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path, &pairs)?,
        None => RunConfig::with_overrides(&pairs)?,
    };
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn prepare_out(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    write(&cfg.out.join("resolved.toml"), &cfg.to_toml())
}

pub fn generate(cfg: &RunConfig) -> Result<()> {
    let spec = cfg
        .data
        .synthetic
        .as_ref()
        .ok_or_else(|| Error::Config("generate needs a [data.synthetic] section, not input files".into()))?;
    let synth = generate_synthetic(spec)?;
    prepare_out(cfg)?;
    synth.graph.save(&cfg.out.join("nodes.tsv"), &cfg.out.join("edges.tsv"))?;
    write(&cfg.out.join("heldout.tsv"), &edges_tsv(&synth.held_out))?;
    eprintln!(
        "wrote {} nodes, {} edges, {} held-out edges to {}",
        synth.graph.num_nodes(),
        synth.graph.num_edges(),
        synth.held_out.len(),
        cfg.out.display()
    );
    Ok(())
}

pub fn train(cfg: &RunConfig) -> Result<()> {
    let data = load_dataset(cfg)?;
    let model = ModelConfig::for_graph(&cfg.model, &data.graph)?;
    prepare_out(cfg)?;
    let result = fit(&data, model, &cfg.train_config())?;
    let ckpt = Checkpoint {
        params: result.best,
        meta: json!({
            "split": cfg.split,
            "best_epoch": result.best_epoch,
            "best_val_auc": result.best_val_auc,
        }),
    };
    save_checkpoint(&cfg.out.join("best.ckpt"), &ckpt)?;
    write(&cfg.out.join("train_log.jsonl"), &log_jsonl(&result.log))?;
    eprintln!(
        "best validation AUC {:.4} at epoch {} of {}",
        result.best_val_auc,
        result.best_epoch,
        result.log.len()
    );
    Ok(())
}

/// Loads a checkpoint and aligns `cfg` with the split it was trained on.
fn open_checkpoint(cfg: &mut RunConfig, path: &Path) -> Result<Checkpoint> {
    let ckpt = load_checkpoint(path)?;
    if let Some(split) = ckpt.meta.get("split") {
        cfg.split = serde_json::from_value::<SplitConfig>(split.clone())?;
    }
    Ok(ckpt)
}

fn check_compatible(model: &ModelConfig, data: &crate::data::Dataset) -> Result<()> {
    if model.relations != data.graph.num_relations() || model.input_dims != data.graph.type_dims() {
        return Err(Error::Checkpoint(format!(
            "checkpoint expects {} relations and attribute dims {:?}; data has {} and {:?}",
            model.relations,
            model.input_dims,
            data.graph.num_relations(),
            data.graph.type_dims()
        )));
    }
    Ok(())
}

/// Evaluates a checkpoint; returns the report JSON that was written.
pub fn evaluate(cfg: &RunConfig, checkpoint: &Path) -> Result<String> {
    let mut cfg = cfg.clone();
    let ckpt = open_checkpoint(&mut cfg, checkpoint)?;
    let data = load_dataset(&cfg)?;
    check_compatible(&ckpt.params.config, &data)?;
    let report = data.evaluate(&ckpt.params, cfg.eval.split, &cfg.eval.ks)?;
    let text = report.to_json();
    prepare_out(&cfg)?;
    let name = format!("metrics_{}.json", split_name(cfg.eval.split));
    write(&cfg.out.join(name), &format!("{text}\n"))?;
    Ok(text)
}

pub fn diagnose(cfg: &RunConfig, checkpoint: &Path) -> Result<()> {
    let mut cfg = cfg.clone();
    let ckpt = open_checkpoint(&mut cfg, checkpoint)?;
    let data = load_dataset(&cfg)?;
    check_compatible(&ckpt.params.config, &data)?;
    if !ckpt.params.config.attention {
        return Err(Error::Config("checkpoint was trained without attention".into()));
    }
    let rows = attention_entropy(&data.plan, &ckpt.params)?;
    prepare_out(&cfg)?;
    write(&cfg.out.join("attention_entropy.csv"), &entropy_csv(&rows))?;
    eprintln!("wrote {} rows to {}", rows.len(), cfg.out.join("attention_entropy.csv").display());
    Ok(())
}

fn split_name(split: Split) -> &'static str {
    match split {
        Split::Train => "train",
        Split::Valid => "valid",
        Split::Test => "test",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_follow_subcommand_flags() {
        let cli = Cli::try_parse_from([
            "relgnn", "--seed", "4", "evaluate", "--checkpoint", "x.ckpt", "--k", "1,5", "--sampler.mu", "0.2",
        ])
        .unwrap();
        let Command::Evaluate { ks, overrides, .. } = &cli.command else {
            panic!("wrong command")
        };
        assert_eq!(ks.as_deref(), Some(&[1, 5][..]));
        assert_eq!(overrides, &["--sampler.mu", "0.2"]);
        let cfg = resolve(&cli, overrides).unwrap();
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.sampler.mu, 0.2);
    }

    #[test]
    fn usage_errors_exit_with_one() {
        assert_eq!(run(["relgnn", "frobnicate"]), 1);
        assert_eq!(run(["relgnn", "train", "--train.epochz", "3"]), 1);
        assert_eq!(run(["relgnn", "train", "--train.epochs"]), 1);
    }
}
