//! Compares the analytic gradient of the training loss with central finite
//! differences on a small synthetic graph, array by array.
//!
//! cargo run --release --example gradient_check

use relgnn::data::{Dataset, SplitConfig};
use relgnn::graph::Triple;
use relgnn::model::{ModelConfig, ModelParameters, ModelSettings};
use relgnn::synthetic::{generate_synthetic, SyntheticSpec};
use relgnn::train::loss_and_gradients;

const STEP: f64 = 1e-5;

fn main() -> relgnn::Result<()> {
    let spec = SyntheticSpec {
        node_counts: vec![6, 6],
        attr_dims: vec![4, 4],
        edges: 40,
        communities: 2,
        ..SyntheticSpec::default()
    };
    let synth = generate_synthetic(&spec)?;
    let data = Dataset::new(synth.graph, synth.held_out, &SplitConfig::default())?;
    let settings = ModelSettings { hidden: 4, ..ModelSettings::default() };
    let params = ModelParameters::init(ModelConfig::for_graph(&settings, &data.graph)?)?;

    let positives: Vec<Triple> = data.splits.train[..6].to_vec();
    let negatives: Vec<Triple> = positives
        .iter()
        .zip(positives.iter().cycle().skip(1))
        .map(|(p, q)| Triple::new(p.head, p.rel, q.tail))
        .collect();
    let loss = |p: &ModelParameters| loss_and_gradients(p, &data.plan, &positives, &negatives).map(|(l, _)| l);
    let (value, grads) = loss_and_gradients(&params, &data.plan, &positives, &negatives)?;
    println!("loss {value:.6}");

    let mut worst: f64 = 0.0;
    for (i, name) in params.names.iter().enumerate() {
        let mut array_worst: f64 = 0.0;
        for k in 0..params.arrays[i].len() {
            let mut plus = params.clone();
            plus.arrays[i].data_mut()[k] += STEP;
            let mut minus = params.clone();
            minus.arrays[i].data_mut()[k] -= STEP;
            let numeric = (loss(&plus)? - loss(&minus)?) / (2.0 * STEP);
            let analytic = grads[i].as_ref().map_or(0.0, |g| g.data()[k]);
            let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            array_worst = array_worst.max(err);
        }
        println!("{name:<24} max relative error {array_worst:.2e}");
        worst = worst.max(array_worst);
    }
    println!("overall {worst:.2e}");
    Ok(())
}
