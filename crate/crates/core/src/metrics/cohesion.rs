use std::collections::BTreeMap;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SocialGraph;

/// Node/Edge/CC/ACC/Triangles row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkStats {
    pub nodes: usize,
    pub edges: usize,
    pub connected_components: usize,
    pub avg_clustering_coeff: f64,
    pub triangles: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Components {
    pub count: usize,
    /// Component id per node, numbered by first appearance.
    pub labels: Vec<usize>,
}

pub fn connected_components(graph: &SocialGraph) -> Components {
    let n = graph.node_count();
    let mut uf = UnionFind::<usize>::new(n);
    for e in graph.edges() {
        uf.union(e.u, e.v);
    }
    let mut ids = BTreeMap::new();
    let labels = (0..n)
        .map(|i| {
            let root = uf.find(i);
            let next = ids.len();
            *ids.entry(root).or_insert(next)
        })
        .collect();
    Components {
        count: ids.len(),
        labels,
    }
}

/// Number of triangles through each node.
pub fn node_triangles(graph: &SocialGraph) -> Vec<u64> {
    let n = graph.node_count();
    let mut mark = vec![false; n];
    (0..n)
        .map(|v| {
            let nbrs = graph.neighbors(v);
            nbrs.iter().for_each(|&(u, _)| mark[u] = true);
            let mut closed = 0u64;
            for &(u, _) in nbrs {
                closed += graph
                    .neighbors(u)
                    .iter()
                    .filter(|&&(w, _)| w > u && mark[w])
                    .count() as u64;
            }
            nbrs.iter().for_each(|&(u, _)| mark[u] = false);
            closed
        })
        .collect()
}

/// Mean local clustering coefficient over all nodes; nodes of degree < 2
/// count as 0. Edge weights are ignored.
pub fn avg_clustering_coefficient(graph: &SocialGraph) -> f64 {
    let n = graph.node_count();
    if n == 0 {
        return 0.0;
    }
    let tri = node_triangles(graph);
    let total: f64 = (0..n)
        .map(|v| {
            let k = graph.degree(v) as f64;
            if k < 2.0 {
                0.0
            } else {
                2.0 * tri[v] as f64 / (k * (k - 1.0))
            }
        })
        .sum();
    total / n as f64
}

/// Exact triangle count. Edges are oriented from lower to higher
/// (degree, index) rank and forward neighbor lists are intersected.
pub fn triangle_count(graph: &SocialGraph) -> u64 {
    let n = graph.node_count();
    let rank = |v: usize| (graph.degree(v), v);
    let forward: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            let mut out: Vec<usize> = graph
                .neighbors(v)
                .iter()
                .map(|&(u, _)| u)
                .filter(|&u| rank(u) > rank(v))
                .collect();
            out.sort_unstable();
            out
        })
        .collect();
    let mut count = 0;
    for v in 0..n {
        for &u in &forward[v] {
            let (a, b) = (&forward[v], &forward[u]);
            let (mut i, mut j) = (0, 0);
            while i < a.len() && j < b.len() {
                match a[i].cmp(&b[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        count += 1;
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
    }
    count
}

pub fn network_stats(graph: &SocialGraph) -> NetworkStats {
    NetworkStats {
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        connected_components: connected_components(graph).count,
        avg_clustering_coeff: avg_clustering_coefficient(graph),
        triangles: triangle_count(graph),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterNetworkRow {
    /// `None` for the whole-graph row.
    pub cluster: Option<usize>,
    pub stats: NetworkStats,
}

/// Stats of the subgraph induced by each cluster, followed by a row for the
/// whole graph. Graph nodes without an assignment only appear in the last row.
pub fn cluster_subgraph_stats(
    graph: &SocialGraph,
    assignments: &BTreeMap<String, usize>,
) -> Result<Vec<ClusterNetworkRow>> {
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (id, &c) in assignments {
        let idx = graph
            .index_of(id)
            .ok_or_else(|| Error::UnknownNode(id.clone()))?;
        members.entry(c).or_default().push(idx);
    }
    let mut rows: Vec<ClusterNetworkRow> = members
        .into_iter()
        .map(|(c, mut nodes)| {
            nodes.sort_unstable();
            ClusterNetworkRow {
                cluster: Some(c),
                stats: network_stats(&graph.induced_subgraph(&nodes)),
            }
        })
        .collect();
    rows.push(ClusterNetworkRow {
        cluster: None,
        stats: network_stats(graph),
    });
    Ok(rows)
}

/// Writes `cluster,node,edge,cc,acc,triangles`; the whole-graph row is labelled `All`.
pub fn write_metrics_csv<W: std::io::Write>(rows: &[ClusterNetworkRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["cluster", "node", "edge", "cc", "acc", "triangles"])?;
    for r in rows {
        w.write_record([
            r.cluster.map_or_else(|| "All".to_string(), |c| c.to_string()),
            r.stats.nodes.to_string(),
            r.stats.edges.to_string(),
            r.stats.connected_components.to_string(),
            format!("{:.4}", r.stats.avg_clustering_coeff),
            r.stats.triangles.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
