//! Trains a single-head model and summarises how concentrated its attention
//! is: per layer, the share of nodes (in-degree >= 4) whose entropy falls
//! below 75% of the uniform bound ln(degree), and a histogram of the ratio.
//!
//! cargo run --release --example attention_entropy [seed]

use relgnn::experiment::{benchmark, run_trial};
use relgnn::model::attention_entropy;

fn main() -> relgnn::Result<()> {
    let seed = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed must be an integer"));
    let cfg = benchmark(seed, &[("model.heads", "1")])?;
    let (data, outcome) = run_trial(&cfg)?;
    let rows = attention_entropy(&data.plan, &outcome.fit.best)?;

    for layer in 1..=cfg.model.layers {
        let ratios: Vec<f64> = rows
            .iter()
            .filter(|r| r.layer == layer && r.in_degree >= 4)
            .map(|r| r.entropy / (r.in_degree as f64).ln())
            .collect();
        let concentrated = ratios.iter().filter(|&&q| q < 0.75).count();
        println!(
            "layer {layer}: {concentrated}/{} nodes below 0.75 of the bound",
            ratios.len()
        );
        let mut bins = [0usize; 10];
        for q in &ratios {
            bins[((q * 10.0) as usize).min(9)] += 1;
        }
        for (b, count) in bins.iter().enumerate() {
            println!("  {:.1}-{:.1} {}", b as f64 / 10.0, (b + 1) as f64 / 10.0, "#".repeat(*count));
        }
    }
    Ok(())
}
