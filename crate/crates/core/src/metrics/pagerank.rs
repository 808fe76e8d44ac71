use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SocialGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PageRankOptions {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Hop probability proportional to edge weight; otherwise uniform over neighbors.
    pub weighted: bool,
}

impl Default for PageRankOptions {
    fn default() -> Self {
        Self {
            damping: 0.85,
            tol: 1e-10,
            max_iter: 200,
            weighted: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRankResult {
    pub node_ids: Vec<String>,
    /// Influence score per node, aligned with `node_ids`; sums to 1.
    pub scores: Vec<f64>,
    pub damping: f64,
    pub iterations: usize,
    /// L1 change of the last iteration.
    pub residual: f64,
    pub converged: bool,
}

impl PageRankResult {
    pub fn score_of(&self, id: &str) -> Option<f64> {
        self.node_ids
            .iter()
            .position(|n| n == id)
            .map(|i| self.scores[i])
    }
}

/// Power iteration on the random-surfer chain of the undirected graph.
/// Isolated nodes are dangling and spread their mass uniformly.
///
/// When `max_iter` is exhausted the best iterate is returned inside
/// [`Error::NotConverged`].
pub fn pagerank(graph: &SocialGraph, opts: &PageRankOptions) -> Result<PageRankResult> {
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if !(0.0..=1.0).contains(&opts.damping) {
        return Err(Error::InvalidArgument(format!(
            "damping {} outside [0, 1]",
            opts.damping
        )));
    }
    let weight = |w: f64| if opts.weighted { w } else { 1.0 };
    let out_weight: Vec<f64> = (0..n)
        .map(|i| graph.neighbors(i).iter().map(|&(_, w)| weight(w)).sum())
        .collect();
    let d = opts.damping;
    let uniform = 1.0 / n as f64;
    let mut x = vec![uniform; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let dangling: f64 = (0..n).filter(|&i| out_weight[i] == 0.0).map(|i| x[i]).sum();
        let base = (1.0 - d) * uniform + d * dangling * uniform;
        for (j, slot) in next.iter_mut().enumerate() {
            let inflow: f64 = graph
                .neighbors(j)
                .iter()
                .map(|&(i, w)| x[i] * weight(w) / out_weight[i])
                .sum();
            *slot = base + d * inflow;
        }
        residual = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if residual <= opts.tol {
            break;
        }
    }
    let result = PageRankResult {
        node_ids: graph.node_ids().to_vec(),
        scores: x,
        damping: d,
        iterations,
        residual,
        converged: residual <= opts.tol,
    };
    if !result.converged {
        return Err(Error::NotConverged {
            max_iter: opts.max_iter,
            best: Box::new(result),
        });
    }
    Ok(result)
}

/// The `k` highest-scoring nodes, best first; ties by node id ascending.
pub fn top_k_influencers(result: &PageRankResult, k: usize) -> Vec<String> {
    let mut order: Vec<usize> = (0..result.scores.len()).collect();
    order.sort_by(|&a, &b| {
        result.scores[b]
            .partial_cmp(&result.scores[a])
            .unwrap_or(Ordering::Equal)
            .then_with(|| result.node_ids[a].cmp(&result.node_ids[b]))
    });
    order
        .into_iter()
        .take(k)
        .map(|i| result.node_ids[i].clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KolReport {
    pub per_snapshot_topk: Vec<Vec<String>>,
    /// Nodes present in every snapshot's top-k, sorted by id.
    pub persistent: Vec<String>,
}

/// Intersects the top-k influencer lists of several graph snapshots.
pub fn persistent_kols(snapshots: &[SocialGraph], k: usize, opts: &PageRankOptions) -> Result<KolReport> {
    if snapshots.is_empty() {
        return Err(Error::EmptyInput);
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let per_snapshot_topk = snapshots
        .iter()
        .map(|g| {
            let pr = match pagerank(g, opts) {
                Ok(pr) => pr,
                Err(Error::NotConverged { best, .. }) => {
                    log::warn!("pagerank did not converge; using best iterate");
                    *best
                }
                Err(e) => return Err(e),
            };
            Ok(top_k_influencers(&pr, k))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut persistent: BTreeSet<String> = per_snapshot_topk[0].iter().cloned().collect();
    for list in &per_snapshot_topk[1..] {
        let here: BTreeSet<String> = list.iter().cloned().collect();
        persistent = persistent.intersection(&here).cloned().collect();
    }
    Ok(KolReport {
        per_snapshot_topk,
        persistent: persistent.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_edge_list, GraphBuilder};
    use nalgebra::{DMatrix, DVector};

    fn graph(text: &str) -> SocialGraph {
        parse_edge_list(text.as_bytes()).unwrap().graph
    }

    // Dense solve of (I − d Mᵀ) x = (1 − d)/n · 1 with dangling rows uniform.
    fn dense_oracle(g: &SocialGraph, d: f64) -> Vec<f64> {
        let n = g.node_count();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            let w = g.weighted_degree(i);
            if w == 0.0 {
                for j in 0..n {
                    m[(i, j)] = 1.0 / n as f64;
                }
            } else {
                for &(j, wij) in g.neighbors(i) {
                    m[(i, j)] = wij / w;
                }
            }
        }
        let a = DMatrix::identity(n, n) - m.transpose() * d;
        let b = DVector::from_element(n, (1.0 - d) / n as f64);
        a.lu().solve(&b).unwrap().iter().copied().collect()
    }

    #[test]
    fn triangle_is_uniform() {
        let pr = pagerank(&graph("a,b\nb,c\nc,a\n"), &PageRankOptions::default()).unwrap();
        for s in pr.scores {
            assert!((s - 1.0 / 3.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn star_matches_dense_solve() {
        let g = graph("hub,a\nhub,b\nhub,c\n");
        let pr = pagerank(&g, &PageRankOptions::default()).unwrap();
        let want = dense_oracle(&g, 0.85);
        let err: f64 = pr.scores.iter().zip(&want).map(|(a, b)| (a - b).abs()).sum();
        assert!(err <= 1e-9);
        assert_eq!(top_k_influencers(&pr, 1), vec!["hub"]);
    }

    #[test]
    fn zero_damping_uniform() {
        let g = graph("a,b\nb,c\nc,d,5\n");
        let pr = pagerank(&g, &PageRankOptions { damping: 0.0, ..Default::default() }).unwrap();
        assert!(pr.scores.iter().all(|&s| (s - 0.25).abs() < 1e-15));
    }

    #[test]
    fn isolated_nodes_and_mass_conservation() {
        let mut b = GraphBuilder::with_nodes(["x", "y", "z", "w"]);
        b.add_edge("x", "y", 2.0);
        let g = b.build();
        let pr = pagerank(&g, &PageRankOptions::default()).unwrap();
        assert!((pr.scores.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        assert!(pr.scores.iter().all(|&s| s > 0.0));
        let want = dense_oracle(&g, 0.85);
        let err: f64 = pr.scores.iter().zip(&want).map(|(a, b)| (a - b).abs()).sum();
        assert!(err <= 1e-9);
    }

    #[test]
    fn not_converged_returns_best() {
        let g = graph("a,b\nb,c\n");
        let opts = PageRankOptions { max_iter: 2, tol: 0.0, ..Default::default() };
        match pagerank(&g, &opts) {
            Err(Error::NotConverged { max_iter: 2, best }) => {
                assert_eq!(best.iterations, 2);
                assert!(!best.converged);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unweighted_flag() {
        let g = graph("a,b,10\nb,c,1\n");
        let w = pagerank(&g, &PageRankOptions::default()).unwrap();
        let u = pagerank(&g, &PageRankOptions { weighted: false, ..Default::default() }).unwrap();
        assert!((u.scores[0] - u.scores[2]).abs() < 1e-12);
        assert!(w.scores[0] > w.scores[2]);
    }

    #[test]
    fn top_k_ties_and_order() {
        let uniform = PageRankResult {
            node_ids: ["d", "b", "a", "c"].iter().map(|s| s.to_string()).collect(),
            scores: vec![0.25; 4],
            damping: 0.85,
            iterations: 1,
            residual: 0.0,
            converged: true,
        };
        assert_eq!(top_k_influencers(&uniform, 3), vec!["a", "b", "c"]);
        assert_eq!(top_k_influencers(&uniform, 10).len(), 4);

        let distinct = PageRankResult {
            scores: vec![0.1, 0.4, 0.2, 0.3],
            ..uniform
        };
        let mut oracle: Vec<(f64, &str)> = distinct
            .scores
            .iter()
            .zip(&distinct.node_ids)
            .map(|(s, n)| (*s, n.as_str()))
            .collect();
        oracle.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let want: Vec<&str> = oracle.iter().map(|o| o.1).collect();
        assert_eq!(top_k_influencers(&distinct, 4), want);
    }

    #[test]
    fn persistent_kol_examples() {
        let g = graph("a,b\na,c\na,d\nb,c\ne,f\n");
        let same = persistent_kols(&[g.clone(), g.clone(), g.clone()], 2, &Default::default()).unwrap();
        assert_eq!(same.persistent.len(), 2);
        let mut top: Vec<String> = same.per_snapshot_topk[0].clone();
        top.sort();
        assert_eq!(same.persistent, top);

        let g1 = graph("a,b\na,c\na,d\n");
        let g2 = graph("a,x\nx,y\nx,z\nx,w\n");
        let disjoint = persistent_kols(&[g1, g2], 1, &Default::default()).unwrap();
        assert!(disjoint.persistent.is_empty());
    }

    #[test]
    fn persistent_kol_constructed_sequence() {
        // a and b are the two largest hubs everywhere; the third hub rotates
        let snapshots: Vec<SocialGraph> = ["c", "d", "e"]
            .iter()
            .map(|third| {
                let mut b = GraphBuilder::new();
                for i in 0..6 {
                    b.add_edge("a", &format!("l{i}"), 1.0);
                }
                for i in 6..11 {
                    b.add_edge("b", &format!("l{i}"), 1.0);
                }
                for (i, hub) in ["c", "d", "e"].iter().enumerate() {
                    b.add_edge(hub, &format!("m{i}"), 1.0);
                }
                for i in 11..15 {
                    b.add_edge(third, &format!("l{i}"), 1.0);
                }
                b.build()
            })
            .collect();
        for g in &snapshots {
            let top = top_k_influencers(&pagerank(g, &Default::default()).unwrap(), 3);
            assert!(top.contains(&"a".to_string()) && top.contains(&"b".to_string()));
        }
        let report = persistent_kols(&snapshots, 3, &Default::default()).unwrap();
        assert_eq!(report.persistent, vec!["a", "b"]);
    }
}
