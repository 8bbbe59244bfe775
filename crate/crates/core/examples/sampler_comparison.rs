//! Random, self-adversarial and ASA training compared over seeds, followed
//! by the false-negative rate of each selection rule under a frozen scorer.
//!
//! cargo run --release --example sampler_comparison [seeds]

use relgnn::experiment::{false_negative_study, seed_sweep, summarize, Summary};
use relgnn::sampling::{SamplerConfig, Strategy};

fn main() -> relgnn::Result<()> {
    let n: u64 = std::env::args().nth(1).map_or(5, |s| s.parse().expect("seed count"));
    let seeds: Vec<u64> = (0..n).collect();

    println!("sampler            MRR               Hit@10            AUC");
    let mut mrr = Vec::new();
    for strategy in ["random", "self_adversarial", "asa"] {
        let runs = seed_sweep(&seeds, &[("sampler.strategy", strategy)])?;
        let m = summarize(&runs, |r| r.mrr);
        println!(
            "{strategy:<18} {m}  {}  {}",
            summarize(&runs, |r| r.hit_at(10).unwrap_or(f64::NAN)),
            summarize(&runs, |r| r.auc)
        );
        mrr.push(m);
    }
    let (random, asa) = (mrr[0], mrr[2]);
    println!(
        "ASA - random MRR gap {:.4}, pooled sd {:.4}",
        asa.mean - random.mean,
        asa.pooled_sd(&random)
    );

    let rule = |strategy, pool_size, mu| SamplerConfig { strategy, pool_size, mu, ..SamplerConfig::default() };
    let samplers = vec![
        ("self-adversarial P=10".to_string(), rule(Strategy::SelfAdversarial, 10, 0.0)),
        ("self-adversarial P=100".to_string(), rule(Strategy::SelfAdversarial, 100, 0.0)),
        ("self-adversarial P=500".to_string(), rule(Strategy::SelfAdversarial, 500, 0.0)),
        ("ASA P=500 mu=0.1".to_string(), rule(Strategy::Asa, 500, 0.1)),
    ];
    let rows = false_negative_study(&seeds, &samplers, 3)?;
    println!("\nfalse-negative rate against held-out edges, frozen scorer");
    for (i, (label, _)) in samplers.iter().enumerate() {
        let rates: Vec<f64> = rows.iter().map(|r| r.rates[i].1).collect();
        println!("{label:<24} {}", Summary::of(&rates));
    }
    Ok(())
}
