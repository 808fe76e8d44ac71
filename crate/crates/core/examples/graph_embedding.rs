//! Embed a planted two-community friendship graph with DeepWalk and LINE,
//! then cluster the embeddings.

use playerseg::cluster::{adjusted_rand_index, KMeansOptions};
use playerseg::embed::{embed_and_cluster, embed_graph, EmbedMethod, EmbedOptions, LineOrder};
use playerseg::ingest::planted_partition;

fn main() -> playerseg::Result<()> {
    let (graph, labels) = planted_partition(2, 30, 0.3, 0.02, 11);
    println!("{} nodes, {} edges", graph.node_count(), graph.edge_count());

    for (method, order) in [
        (EmbedMethod::DeepWalk, LineOrder::First),
        (EmbedMethod::Line, LineOrder::First),
        (EmbedMethod::Line, LineOrder::Second),
    ] {
        let opts = EmbedOptions { method, line_order: order, seed: 11, ..Default::default() };
        let run = embed_graph(&graph, &opts)?;
        let first = run.losses.first().copied().unwrap_or(f64::NAN);
        let last = run.losses.last().copied().unwrap_or(f64::NAN);
        let (_, model) = embed_and_cluster(&graph, 2, &opts, &KMeansOptions::default())?;
        let ari = adjusted_rand_index(&model.assignments, &labels)?;
        println!("{method:?}/{order:?}: loss {first:.3} -> {last:.3}, ARI {ari:.3}");
    }
    Ok(())
}
