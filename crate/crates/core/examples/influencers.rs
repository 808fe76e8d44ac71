//! PageRank influencers per graph snapshot and the ones that persist
//! across all of them.

use playerseg::ingest::{planted_partition_graph, GraphBuilder, SocialGraph};
use playerseg::metrics::{pagerank, persistent_kols, top_k_influencers, PageRankOptions};

/// A random friendship graph plus a few hubs befriending many players.
fn snapshot(seed: u64, hubs: &[usize]) -> SocialGraph {
    let ids: Vec<String> = (0..80).map(|i| format!("p{i:02}")).collect();
    let base = planted_partition_graph(&ids, &vec![0; 80], 0.04, 0.0, seed);
    let mut b = GraphBuilder::with_nodes(&ids);
    for e in base.edges() {
        b.add_edge_indices(e.u, e.v, e.weight);
    }
    for &h in hubs {
        for v in (0..80).filter(|v| (v + h + seed as usize).is_multiple_of(3)) {
            b.add_edge_indices(h, v, 1.0);
        }
    }
    b.build()
}

fn main() -> playerseg::Result<()> {
    let weeks = [snapshot(1, &[5, 17, 42]), snapshot(2, &[5, 17, 63]), snapshot(3, &[5, 17, 42])];
    let opts = PageRankOptions::default();
    for (w, g) in weeks.iter().enumerate() {
        let pr = pagerank(g, &opts)?;
        println!("week {w}: {} iterations, top-5 {:?}", pr.iterations, top_k_influencers(&pr, 5));
    }
    let report = persistent_kols(&weeks, 3, &opts)?;
    println!("persistent top-3 influencers: {:?}", report.persistent);
    Ok(())
}
