use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::alias::AliasTable;
use crate::error::{Error, Result};
use crate::ingest::SocialGraph;
use crate::rng::rng_for;

/// Truncated random walks over a graph, one batch ("epoch") per
/// `walks_per_node` with every node starting exactly one walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkCorpus {
    pub walks: Vec<Vec<usize>>,
    pub walks_per_node: usize,
    /// Nodes per walk, the start node included.
    pub walk_length: usize,
    /// Unweighted degree per node; drives the negative-sampling distribution.
    pub degrees: Vec<usize>,
}

impl WalkCorpus {
    pub fn node_count(&self) -> usize {
        self.degrees.len()
    }
}

/// From every node, `walks_per_node` walks of `walk_length` nodes. The next
/// hop is drawn proportionally to edge weight; a walk from an isolated node
/// is just that node. The walk starting at node `v` in epoch `e` uses its
/// own RNG stream, so generation is parallel without affecting the output.
pub fn random_walks(
    graph: &SocialGraph,
    walks_per_node: usize,
    walk_length: usize,
    seed: u64,
) -> Result<WalkCorpus> {
    if walks_per_node == 0 || walk_length == 0 {
        return Err(Error::InvalidArgument("walks_per_node and walk_length must be >= 1".into()));
    }
    let n = graph.node_count();
    let tables: Vec<Option<AliasTable>> = (0..n)
        .map(|v| {
            let w: Vec<f64> = graph.neighbors(v).iter().map(|&(_, w)| w).collect();
            AliasTable::new(&w).ok()
        })
        .collect();
    let mut walks = Vec::with_capacity(n * walks_per_node);
    for epoch in 0..walks_per_node {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng_for(seed, &[1, epoch as u64]));
        let batch: Vec<Vec<usize>> = order
            .par_iter()
            .map(|&start| {
                let mut rng = rng_for(seed, &[2, epoch as u64, start as u64]);
                let mut walk = Vec::with_capacity(walk_length);
                walk.push(start);
                let mut at = start;
                while walk.len() < walk_length {
                    let Some(table) = &tables[at] else { break };
                    at = graph.neighbors(at)[table.sample(&mut rng)].0;
                    walk.push(at);
                }
                walk
            })
            .collect();
        walks.extend(batch);
    }
    Ok(WalkCorpus {
        walks,
        walks_per_node,
        walk_length,
        degrees: (0..n).map(|v| graph.degree(v)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_edge_list, planted_partition, GraphBuilder};

    #[test]
    fn isolated_node_walks_are_singletons() {
        let mut b = GraphBuilder::with_nodes(["solo"]);
        b.add_edge("a", "b", 1.0);
        let c = random_walks(&b.build(), 3, 5, 0).unwrap();
        assert_eq!(c.walks.len(), 9);
        assert_eq!(c.walks.iter().filter(|w| **w == vec![0]).count(), 3);
    }

    #[test]
    fn single_edge_alternates() {
        let g = parse_edge_list("a,b\n".as_bytes()).unwrap().graph;
        let c = random_walks(&g, 2, 4, 1).unwrap();
        for w in &c.walks {
            let other = 1 - w[0];
            assert_eq!(w, &vec![w[0], other, w[0], other]);
        }
    }

    #[test]
    fn walks_stay_inside_components_and_follow_edges() {
        let (g, labels) = planted_partition(2, 30, 0.5, 0.0, 4);
        let c = random_walks(&g, 4, 20, 7).unwrap();
        assert_eq!(c.walks.len(), 4 * 60);
        for w in &c.walks {
            assert_eq!(w.len(), 20);
            assert!(w.iter().all(|&v| labels[v] == labels[w[0]]));
            assert!(w.windows(2).all(|p| g.has_edge(p[0], p[1])));
        }
    }

    #[test]
    fn every_node_starts_once_per_epoch() {
        let (g, _) = planted_partition(3, 10, 0.4, 0.05, 2);
        let c = random_walks(&g, 3, 6, 3).unwrap();
        for epoch in c.walks.chunks(30) {
            let mut starts: Vec<usize> = epoch.iter().map(|w| w[0]).collect();
            starts.sort_unstable();
            assert_eq!(starts, (0..30).collect::<Vec<_>>());
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let (g, _) = planted_partition(2, 15, 0.4, 0.05, 5);
        let a = random_walks(&g, 2, 10, 11).unwrap();
        assert_eq!(a, random_walks(&g, 2, 10, 11).unwrap());
        assert_ne!(a.walks, random_walks(&g, 2, 10, 12).unwrap().walks);
    }

    #[test]
    fn heavy_edge_preferred() {
        let g = parse_edge_list("a,b,99\na,c,1\n".as_bytes()).unwrap().graph;
        let c = random_walks(&g, 200, 2, 0).unwrap();
        let a = g.index_of("a").unwrap();
        let b = g.index_of("b").unwrap();
        let from_a: Vec<&Vec<usize>> = c.walks.iter().filter(|w| w[0] == a).collect();
        let to_b = from_a.iter().filter(|w| w[1] == b).count();
        assert!(to_b as f64 / from_a.len() as f64 > 0.9);
    }

    #[test]
    fn zero_counts_rejected() {
        let g = parse_edge_list("a,b\n".as_bytes()).unwrap().graph;
        assert!(random_walks(&g, 0, 5, 0).is_err());
        assert!(random_walks(&g, 1, 0, 0).is_err());
    }
}
