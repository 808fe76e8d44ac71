//! Per-cluster social cohesion (components, clustering coefficient,
//! triangles) and a per-cluster online-time histogram.

use std::collections::BTreeMap;

use playerseg::ingest::{planted_partition, GraphBuilder};
use playerseg::metrics::{cluster_subgraph_stats, duration_histogram, write_histogram_csv, write_metrics_csv};

fn main() -> playerseg::Result<()> {
    // Three communities of decreasing density and one bridge between two.
    let labels: Vec<usize> = (0..75).map(|i| i / 25).collect();
    let mut b = GraphBuilder::with_nodes((0..75).map(|i| format!("n{i}")));
    for (c, p) in [(0usize, 0.5), (1, 0.2), (2, 0.05)] {
        let (g, _) = planted_partition(1, 25, p, 0.0, 10 + c as u64);
        for e in g.edges() {
            b.add_edge_indices(e.u + 25 * c, e.v + 25 * c, 1.0);
        }
    }
    b.add_edge("n0", "n30", 1.0);
    let graph = b.build();

    let assignments: BTreeMap<String, usize> =
        graph.node_ids().iter().cloned().zip(labels.iter().copied()).collect();
    let rows = cluster_subgraph_stats(&graph, &assignments)?;
    write_metrics_csv(&rows, std::io::stdout())?;

    let durations: BTreeMap<String, f64> = graph
        .node_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), 600.0 + (i % 25) as f64 * 150.0 * (1 + labels[i]) as f64))
        .collect();
    let hist = duration_histogram(&durations, &assignments, 1000.0)?;
    println!();
    write_histogram_csv(&hist, std::io::stdout())
}
