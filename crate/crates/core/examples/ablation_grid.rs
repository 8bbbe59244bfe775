//! Attention on or off crossed with ASA or random sampling, each cell
//! averaged over seeds, printed as a markdown table.
//!
//! cargo run --release --example ablation_grid [seeds]

use relgnn::experiment::{ablation_grid, ablation_table};

fn main() -> relgnn::Result<()> {
    let n: u64 = std::env::args().nth(1).map_or(5, |s| s.parse().expect("seed count"));
    let seeds: Vec<u64> = (0..n).collect();
    print!("{}", ablation_table(&ablation_grid(&seeds)?));
    Ok(())
}
