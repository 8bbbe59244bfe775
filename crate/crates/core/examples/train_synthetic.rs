//! Trains on the synthetic benchmark with the ASA sampler and reports test
//! metrics of the best validation checkpoint.
//!
//! cargo run --release --example train_synthetic [seed]

use relgnn::experiment::{benchmark, run_trial};

fn main() -> relgnn::Result<()> {
    let seed = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed must be an integer"));
    let cfg = benchmark(seed, &[])?;
    let (data, outcome) = run_trial(&cfg)?;
    println!(
        "{} train / {} valid / {} test edges, {} parameters",
        data.splits.train.len(),
        data.splits.valid.len(),
        data.splits.test.len(),
        outcome.fit.best.num_params()
    );
    println!("epoch  loss     val_auc  neg_score  fn_rate");
    for l in outcome.fit.log.iter().filter(|l| l.epoch % 5 == 0 || l.epoch == outcome.fit.best_epoch) {
        println!(
            "{:>5}  {:.4}   {:.4}   {:.4}     {:.4}",
            l.epoch,
            l.loss,
            l.val_auc,
            l.mean_neg_score,
            l.fn_rate.unwrap_or(f64::NAN)
        );
    }
    println!("best epoch {} (val AUC {:.4})", outcome.fit.best_epoch, outcome.fit.best_val_auc);
    println!("test {}", outcome.report.to_json());
    Ok(())
}
