//! Generates the default synthetic graph, writes it as TSV, and loads it back.
//!
//! cargo run --release --example generate_graph [out_dir]

use std::path::PathBuf;

use relgnn::graph::{edges_tsv, load_graph, LoadOptions};
use relgnn::synthetic::{generate_synthetic, SyntheticSpec};

fn main() -> relgnn::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("relgnn-graph"));
    std::fs::create_dir_all(&out).expect("create output directory");

    let spec = SyntheticSpec::default();
    let synth = generate_synthetic(&spec)?;
    let (nodes, edges) = (out.join("nodes.tsv"), out.join("edges.tsv"));
    synth.graph.save(&nodes, &edges)?;
    std::fs::write(out.join("heldout.tsv"), edges_tsv(&synth.held_out)).expect("write heldout.tsv");

    let loaded = load_graph(&nodes, &edges, LoadOptions::default())?;
    assert_eq!(loaded.edges(), synth.graph.edges());

    println!("wrote {}", out.display());
    println!(
        "{} nodes in {} types, {} relations, {} edges (+{} held out)",
        loaded.num_nodes(),
        loaded.num_node_types(),
        loaded.num_relations(),
        loaded.num_edges(),
        synth.held_out.len()
    );
    for r in 0..loaded.num_relations() {
        let (src, dst) = spec.relation_types(r);
        let count = loaded.edges().iter().filter(|e| e.rel == r).count();
        let intra = loaded
            .edges()
            .iter()
            .filter(|e| e.rel == r && synth.communities[e.head] == synth.communities[e.tail])
            .count();
        println!("relation {r}: type {src} -> type {dst}, {count} edges, {intra} within a community");
    }
    Ok(())
}
