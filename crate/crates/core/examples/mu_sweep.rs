//! Mean Hit@10 of ASA training as the margin varies.
//!
//! cargo run --release --example mu_sweep [seeds]

use relgnn::experiment::mu_sweep;

fn main() -> relgnn::Result<()> {
    let n: u64 = std::env::args().nth(1).map_or(5, |s| s.parse().expect("seed count"));
    let seeds: Vec<u64> = (0..n).collect();
    let mus = [0.0, 0.05, 0.1, 0.15, 0.2, 0.3];
    for (mu, hits) in mu_sweep(&mus, &seeds, 10)? {
        let bar = "#".repeat((hits.mean * 50.0).round() as usize);
        println!("mu {mu:<5} Hit@10 {hits}  {bar}");
    }
    Ok(())
}
