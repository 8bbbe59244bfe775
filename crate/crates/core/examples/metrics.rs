//! The evaluation metrics on small hand-checkable inputs, then a full
//! filtered-ranking report for an untrained model.
//!
//! cargo run --example metrics

use relgnn::data::{Dataset, Split, SplitConfig};
use relgnn::eval::{average_precision, f1_at, hit_at_k, mrr, roc_auc, LabeledScores, RankingCase, DEFAULT_KS};
use relgnn::graph::Triple;
use relgnn::model::{ModelConfig, ModelParameters, ModelSettings};
use relgnn::sampling::Side;
use relgnn::synthetic::{generate_synthetic, SyntheticSpec};

fn main() -> relgnn::Result<()> {
    let scored = LabeledScores::new(vec![0.9, 0.8, 0.3, 0.1], vec![true, false, true, false])?;
    println!("AUC {}", roc_auc(&scored)?);
    println!("AP  {:.4}", average_precision(&scored)?);
    println!("F1@0.5 {:.4}", f1_at(&scored, 0.5));

    let cases: Vec<RankingCase> = [1, 2, 4]
        .into_iter()
        .map(|rank| RankingCase {
            positive: Triple::new(0, 0, 1),
            side: Side::Tail,
            num_candidates: 10,
            rank,
        })
        .collect();
    println!("MRR {:.4}, Hit@1 {:.4}, Hit@3 {:.4}", mrr(&cases), hit_at_k(&cases, 1), hit_at_k(&cases, 3));

    let synth = generate_synthetic(&SyntheticSpec::default())?;
    let data = Dataset::new(synth.graph, synth.held_out, &SplitConfig::default())?;
    let params = ModelParameters::init(ModelConfig::for_graph(&ModelSettings::default(), &data.graph)?)?;
    println!("untrained model: {}", data.evaluate(&params, Split::Test, &DEFAULT_KS)?.to_json());
    Ok(())
}
