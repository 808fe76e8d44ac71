use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected edge with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Undirected weighted friendship graph.
///
/// Each unordered pair is stored once, weights are positive and there are no
/// self-loops. Adjacency lists are sorted by neighbor index.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialGraph {
    node_ids: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl SocialGraph {
    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn node_id(&self, i: usize) -> &str {
        &self.node_ids[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn weighted_degree(&self, i: usize) -> f64 {
        self.adjacency[i].iter().map(|&(_, w)| w).sum()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u]
            .binary_search_by_key(&v, |&(n, _)| n)
            .is_ok()
    }

    /// Subgraph on `nodes` keeping only edges with both endpoints inside.
    /// Node order follows `nodes`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> SocialGraph {
        let mut builder = GraphBuilder::new();
        let mut remap = vec![usize::MAX; self.node_count()];
        for &n in nodes {
            remap[n] = builder.add_node(&self.node_ids[n]);
        }
        for e in &self.edges {
            let (a, b) = (remap[e.u], remap[e.v]);
            if a != usize::MAX && b != usize::MAX {
                builder.add_edge_indices(a, b, e.weight);
            }
        }
        builder.build()
    }

    /// Same topology with every weight set to 1.
    pub fn unweighted(&self) -> SocialGraph {
        let mut g = self.clone();
        g.edges.iter_mut().for_each(|e| e.weight = 1.0);
        g.adjacency
            .iter_mut()
            .flatten()
            .for_each(|(_, w)| *w = 1.0);
        g
    }
}

/// Incremental constructor that merges duplicate pairs by summing weights
/// and drops self-loops.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    node_ids: Vec<String>,
    index: HashMap<String, usize>,
    pairs: BTreeMap<(usize, usize), f64>,
    self_loops: usize,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_nodes<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut b = Self::new();
        for id in ids {
            b.add_node(id.as_ref());
        }
        b
    }

    pub fn add_node(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        self.node_ids.push(id.to_string());
        self.index.insert(id.to_string(), self.node_ids.len() - 1);
        self.node_ids.len() - 1
    }

    pub fn add_edge(&mut self, u: &str, v: &str, weight: f64) {
        let a = self.add_node(u);
        let b = self.add_node(v);
        self.add_edge_indices(a, b, weight);
    }

    /// Panics if either index has not been added.
    pub fn add_edge_indices(&mut self, u: usize, v: usize, weight: f64) {
        assert!(u < self.node_ids.len() && v < self.node_ids.len());
        if u == v {
            self.self_loops += 1;
            return;
        }
        *self.pairs.entry((u.min(v), u.max(v))).or_insert(0.0) += weight;
    }

    pub fn self_loops_dropped(&self) -> usize {
        self.self_loops
    }

    pub fn build(self) -> SocialGraph {
        let n = self.node_ids.len();
        let mut adjacency = vec![Vec::new(); n];
        let edges: Vec<Edge> = self
            .pairs
            .into_iter()
            .map(|((u, v), weight)| Edge { u, v, weight })
            .collect();
        for e in &edges {
            adjacency[e.u].push((e.v, e.weight));
            adjacency[e.v].push((e.u, e.weight));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(n, _)| n);
        }
        SocialGraph {
            node_ids: self.node_ids,
            index: self.index,
            edges,
            adjacency,
        }
    }
}

/// Result of reading an edge list.
#[derive(Debug, Clone)]
pub struct EdgeList {
    pub graph: SocialGraph,
    pub self_loops_dropped: usize,
}

/// Reads `u,v[,weight]` rows (no header). Weight defaults to 1.
pub fn parse_edge_list<R: Read>(reader: R) -> Result<EdgeList> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut builder = GraphBuilder::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let weight = match record.len() {
            2 => 1.0,
            3 => record[2]
                .parse::<f64>()
                .ok()
                .filter(|w| w.is_finite() && *w > 0.0)
                .ok_or(Error::MalformedRow(line))?,
            _ => return Err(Error::MalformedRow(line)),
        };
        if record[0].is_empty() || record[1].is_empty() {
            return Err(Error::MalformedRow(line));
        }
        builder.add_edge(&record[0], &record[1], weight);
    }
    let self_loops_dropped = builder.self_loops_dropped();
    if self_loops_dropped > 0 {
        log::warn!("dropped {self_loops_dropped} self-loop(s) from edge list");
    }
    Ok(EdgeList {
        graph: builder.build(),
        self_loops_dropped,
    })
}

/// Writes the graph back as `u,v,weight` rows.
pub fn write_edge_list<W: std::io::Write>(graph: &SocialGraph, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for e in graph.edges() {
        w.write_record([
            graph.node_id(e.u),
            graph.node_id(e.v),
            &e.weight.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn merges_reverse_duplicates() {
        let el = parse_edge_list("a,b\nb,a\n".as_bytes()).unwrap();
        assert_eq!(el.graph.edge_count(), 1);
        assert_eq!(el.graph.edges()[0], Edge { u: 0, v: 1, weight: 2.0 });
    }

    #[test]
    fn self_loop_dropped_with_warning() {
        let el = parse_edge_list("a,a\n".as_bytes()).unwrap();
        assert_eq!(el.graph.node_ids(), &["a"]);
        assert_eq!(el.graph.edge_count(), 0);
        assert_eq!(el.self_loops_dropped, 1);
    }

    #[test]
    fn weighted_rows() {
        let el = parse_edge_list("a,b,0.5\nb,c,2\n".as_bytes()).unwrap();
        assert_eq!(el.graph.node_count(), 3);
        assert_eq!(el.graph.edge_count(), 2);
        assert_eq!(el.graph.weighted_degree(1), 2.5);
    }

    #[test]
    fn malformed_rows() {
        assert!(matches!(
            parse_edge_list("a,b\nc\n".as_bytes()),
            Err(Error::MalformedRow(2))
        ));
        assert!(matches!(
            parse_edge_list("a,b,x\n".as_bytes()),
            Err(Error::MalformedRow(1))
        ));
        assert!(matches!(
            parse_edge_list("a,b,-1\n".as_bytes()),
            Err(Error::MalformedRow(1))
        ));
    }

    #[test]
    fn induced_subgraph_drops_cross_edges() {
        let g = parse_edge_list("a,b\nb,c\nc,a\nc,d\n".as_bytes()).unwrap().graph;
        let sub = g.induced_subgraph(&[0, 1, 3]);
        assert_eq!(sub.node_ids(), &["a", "b", "d"]);
        assert_eq!(sub.edge_count(), 1);
    }

    proptest! {
        #[test]
        fn no_self_loops_or_duplicates(rows in proptest::collection::vec((0u8..8, 0u8..8, 1u8..5), 0..60)) {
            let text: String = rows.iter().map(|(u, v, w)| format!("n{u},n{v},{w}\n")).collect();
            let g = parse_edge_list(text.as_bytes()).unwrap().graph;
            let mut seen = std::collections::HashSet::new();
            for e in g.edges() {
                prop_assert!(e.u < e.v);
                prop_assert!(e.weight > 0.0);
                prop_assert!(seen.insert((e.u, e.v)));
            }
            for i in 0..g.node_count() {
                prop_assert!(g.neighbors(i).iter().all(|&(n, _)| n != i));
            }
        }
    }
}
