use rand::Rng;
use serde::{Deserialize, Serialize};

use super::alias::AliasTable;
use super::skipgram::{
    draw_negatives, init_rows, learning_rate, noise_table, sgd_step, sgd_step_shared,
};
use super::{EmbeddingMatrix, TrainingRun};
use crate::error::{Error, Result};
use crate::ingest::SocialGraph;
use crate::rng::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineOrder {
    #[default]
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LineOptions {
    pub dim: usize,
    pub order: LineOrder,
    pub negatives: usize,
    /// Edge draws; `None` means 100 per edge.
    pub samples: Option<usize>,
    pub lr_start: f64,
    pub lr_end: f64,
    /// Number of loss checkpoints reported.
    pub checkpoints: usize,
    pub seed: u64,
}

impl Default for LineOptions {
    fn default() -> Self {
        Self {
            dim: 64,
            order: LineOrder::First,
            negatives: 5,
            samples: None,
            lr_start: 0.025,
            lr_end: 0.0001,
            checkpoints: 10,
            seed: 0,
        }
    }
}

/// LINE with edge sampling. Each draw picks an edge proportionally to its
/// weight and a random direction `u → v`, then takes one SGD step on
/// `−ln σ(e_u·x_v) − Σ ln σ(−e_u·x_n)` where `x` is the embedding itself
/// (first order) or the context matrix (second order). Negatives follow
/// `degree^0.75` and never equal `u` or `v`.
///
/// The returned losses are mean per-sample losses over equal blocks of draws.
pub fn line_train(graph: &SocialGraph, opts: &LineOptions) -> Result<TrainingRun> {
    if graph.edge_count() == 0 {
        return Err(Error::NoEdges);
    }
    if opts.dim == 0 {
        return Err(Error::InvalidArgument("dim must be >= 1".into()));
    }
    let n = graph.node_count();
    let samples = opts.samples.unwrap_or(100 * graph.edge_count());
    let edges = graph.edges();
    let weights: Vec<f64> = edges.iter().map(|e| e.weight).collect();
    let edge_table = AliasTable::new(&weights)?;
    let degrees: Vec<usize> = (0..n).map(|v| graph.degree(v)).collect();
    let noise = noise_table(&degrees);

    let mut init_rng = rng_for(opts.seed, &[5]);
    let mut emb = init_rows(n, opts.dim, &mut init_rng);
    let mut ctx = match opts.order {
        LineOrder::First => Vec::new(),
        LineOrder::Second => vec![vec![0.0; opts.dim]; n],
    };
    let mut rng = rng_for(opts.seed, &[6]);
    let blocks = opts.checkpoints.clamp(1, samples.max(1));
    let mut losses = Vec::with_capacity(blocks);
    let mut block_loss = 0.0;
    let mut block_count = 0usize;
    let mut negs = Vec::with_capacity(opts.negatives);
    for s in 0..samples {
        let e = &edges[edge_table.sample(&mut rng)];
        let (u, v) = if rng.random::<bool>() { (e.u, e.v) } else { (e.v, e.u) };
        draw_negatives(noise.as_ref(), opts.negatives, &[u, v], &mut rng, &mut negs);
        let lr = learning_rate(opts.lr_start, opts.lr_end, s as f64 / samples as f64);
        block_loss += match opts.order {
            LineOrder::First => sgd_step_shared(&mut emb, u, v, &negs, lr),
            LineOrder::Second => sgd_step(&mut emb, &mut ctx, u, v, &negs, lr),
        };
        block_count += 1;
        if (s + 1) * blocks / samples > losses.len() {
            losses.push(block_loss / block_count as f64);
            block_loss = 0.0;
            block_count = 0;
        }
    }
    log::info!(
        "line seed={} order={:?} samples={samples} final_loss={:.6}",
        opts.seed,
        opts.order,
        losses.last().copied().unwrap_or(f64::NAN)
    );
    Ok(TrainingRun {
        embedding: EmbeddingMatrix {
            node_ids: graph.node_ids().to_vec(),
            dim: opts.dim,
            vectors: emb,
            context_vectors: (opts.order == LineOrder::Second).then_some(ctx),
        },
        losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::skipgram::sgns_loss_and_grad;
    use crate::embed::skipgram::tests::{cosine_gap, random_vec};
    use crate::ingest::{parse_edge_list, planted_partition, GraphBuilder};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
    }

    // Whole-matrix loss for one sampled edge, as training sees it.
    fn edge_loss(order: LineOrder, emb: &[Vec<f64>], ctx: &[Vec<f64>], u: usize, v: usize, negs: &[usize]) -> f64 {
        let other = if order == LineOrder::First { emb } else { ctx };
        let rows: Vec<&[f64]> = negs.iter().map(|&n| other[n].as_slice()).collect();
        sgns_loss_and_grad(&emb[u], &other[v], &rows).loss
    }

    fn check_order(order: LineOrder, seed: u64) -> f64 {
        let mut rng = rng_for(seed, &[]);
        let (n, dim) = (7, 6);
        let emb: Vec<Vec<f64>> = (0..n).map(|_| random_vec(&mut rng, dim)).collect();
        let ctx: Vec<Vec<f64>> = (0..n).map(|_| random_vec(&mut rng, dim)).collect();
        let (u, v, negs) = (1, 4, vec![0, 2, 6]);
        // Analytic gradients scattered into full matrices.
        let other = if order == LineOrder::First { &emb } else { &ctx };
        let rows: Vec<&[f64]> = negs.iter().map(|&k| other[k].as_slice()).collect();
        let g = sgns_loss_and_grad(&emb[u], &other[v], &rows);
        let mut g_emb = vec![vec![0.0; dim]; n];
        let mut g_ctx = vec![vec![0.0; dim]; n];
        g_emb[u] = g.target.clone();
        let g_other = if order == LineOrder::First { &mut g_emb } else { &mut g_ctx };
        g_other[v] = g.positive.clone();
        for (&k, gn) in negs.iter().zip(&g.negatives) {
            g_other[k] = gn.clone();
        }
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in 0..dim {
                let (mut up, mut dn) = (emb.clone(), emb.clone());
                up[r][c] += h;
                dn[r][c] -= h;
                let fd = (edge_loss(order, &up, &ctx, u, v, &negs) - edge_loss(order, &dn, &ctx, u, v, &negs)) / (2.0 * h);
                worst = worst.max(rel(g_emb[r][c], fd));
                let (mut up, mut dn) = (ctx.clone(), ctx.clone());
                up[r][c] += h;
                dn[r][c] -= h;
                let fd = (edge_loss(order, &emb, &up, u, v, &negs) - edge_loss(order, &emb, &dn, u, v, &negs)) / (2.0 * h);
                worst = worst.max(rel(g_ctx[r][c], fd));
            }
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..10 {
            assert!(check_order(LineOrder::First, seed) <= 1e-4);
            assert!(check_order(LineOrder::Second, seed) <= 1e-4);
        }
    }

    #[test]
    fn single_edge_loss_decreases() {
        let g = parse_edge_list("a,b\n".as_bytes()).unwrap().graph;
        let run = line_train(&g, &LineOptions { dim: 8, samples: Some(2000), lr_start: 0.1, ..Default::default() }).unwrap();
        assert!(run.losses.last().unwrap() < &run.losses[0]);
    }

    #[test]
    fn first_order_separates_cliques() {
        let (g, labels) = planted_partition(2, 30, 1.0, 0.0, 0);
        let run = line_train(&g, &LineOptions { dim: 16, ..Default::default() }).unwrap();
        assert!(cosine_gap(&run.embedding, &labels) >= 0.2);
    }

    #[test]
    fn second_order_has_context_vectors() {
        let (g, _) = planted_partition(2, 8, 0.6, 0.1, 1);
        let run = line_train(&g, &LineOptions { dim: 4, order: LineOrder::Second, ..Default::default() }).unwrap();
        let ctx = run.embedding.context_vectors.as_ref().unwrap();
        assert_eq!(ctx.len(), 16);
        assert!(run.embedding.vectors.iter().flatten().all(|x| x.is_finite()));
        assert_eq!(run.losses.len(), 10);
    }

    #[test]
    fn isolated_nodes_keep_initialization() {
        let mut b = GraphBuilder::with_nodes(["iso"]);
        b.add_edge("a", "b", 1.0);
        let g = b.build();
        let opts = LineOptions { dim: 4, samples: Some(200), ..Default::default() };
        let run = line_train(&g, &opts).unwrap();
        let init = init_rows(3, 4, &mut rng_for(opts.seed, &[5]));
        assert_eq!(run.embedding.vectors[0], init[0]);
    }

    #[test]
    fn no_edges() {
        let g = GraphBuilder::with_nodes(["a", "b"]).build();
        assert!(matches!(line_train(&g, &LineOptions::default()), Err(Error::NoEdges)));
    }

    #[test]
    fn deterministic() {
        let (g, _) = planted_partition(2, 10, 0.5, 0.05, 2);
        let opts = LineOptions { dim: 8, ..Default::default() };
        assert_eq!(line_train(&g, &opts).unwrap().embedding, line_train(&g, &opts).unwrap().embedding);
    }
}
