use rand::Rng;
use serde::{Deserialize, Serialize};

use super::alias::AliasTable;
use super::walks::WalkCorpus;
use super::{EmbeddingMatrix, TrainingRun};
use crate::error::{Error, Result};
use crate::rng::{rng_for, StageRng};

/// Redraws allowed when a negative collides with an excluded node.
pub(crate) const NEGATIVE_RETRIES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkipGramOptions {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub seed: u64,
}

impl Default for SkipGramOptions {
    fn default() -> Self {
        Self {
            dim: 64,
            window: 5,
            negatives: 5,
            epochs: 5,
            lr_start: 0.025,
            lr_end: 0.0001,
            seed: 0,
        }
    }
}

/// Loss and gradients of one positive pair with its negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGrad {
    pub loss: f64,
    pub target: Vec<f64>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `−ln σ(t·p) − Σ ln σ(−t·n)` and its gradient with respect to each vector.
pub fn sgns_loss_and_grad(target: &[f64], positive: &[f64], negatives: &[&[f64]]) -> PairGrad {
    let s = dot(target, positive);
    let mut loss = softplus(-s);
    let gp = sigmoid(s) - 1.0;
    let mut g_target: Vec<f64> = positive.iter().map(|p| gp * p).collect();
    let g_positive = target.iter().map(|t| gp * t).collect();
    let g_negatives = negatives
        .iter()
        .map(|neg| {
            let s = dot(target, neg);
            loss += softplus(s);
            let gn = sigmoid(s);
            g_target.iter_mut().zip(neg.iter()).for_each(|(g, x)| *g += gn * x);
            target.iter().map(|t| gn * t).collect()
        })
        .collect();
    PairGrad {
        loss,
        target: g_target,
        positive: g_positive,
        negatives: g_negatives,
    }
}

/// Noise distribution over nodes, proportional to `degree^0.75`.
pub(crate) fn noise_table(degrees: &[usize]) -> Option<AliasTable> {
    let w: Vec<f64> = degrees.iter().map(|&d| (d as f64).powf(0.75)).collect();
    AliasTable::new(&w).ok()
}

/// Draws up to `count` negatives avoiding `exclude`; a draw that keeps
/// colliding after the retry budget is skipped.
pub(crate) fn draw_negatives(
    table: Option<&AliasTable>,
    count: usize,
    exclude: &[usize],
    rng: &mut StageRng,
    out: &mut Vec<usize>,
) {
    out.clear();
    let Some(table) = table else { return };
    for _ in 0..count {
        for _ in 0..NEGATIVE_RETRIES {
            let n = table.sample(rng);
            if !exclude.contains(&n) {
                out.push(n);
                break;
            }
        }
    }
}

/// Random rows in `±0.5/dim`.
pub(crate) fn init_rows(n: usize, dim: usize, rng: &mut StageRng) -> Vec<Vec<f64>> {
    let scale = 0.5 / dim as f64;
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-scale..scale)).collect())
        .collect()
}

/// Linear decay from `start` at progress 0 to `end` at progress 1.
pub(crate) fn learning_rate(start: f64, end: f64, progress: f64) -> f64 {
    let p = progress.clamp(0.0, 1.0);
    start * (1.0 - p) + end * p
}

fn descend(row: &mut [f64], grad: &[f64], lr: f64) {
    row.iter_mut().zip(grad).for_each(|(x, g)| *x -= lr * g);
}

/// One SGD step on row `target` of `left` against rows of `right`; returns the pair loss.
pub(crate) fn sgd_step(
    left: &mut [Vec<f64>],
    right: &mut [Vec<f64>],
    target: usize,
    positive: usize,
    negs: &[usize],
    lr: f64,
) -> f64 {
    let neg_rows: Vec<&[f64]> = negs.iter().map(|&n| right[n].as_slice()).collect();
    let grad = sgns_loss_and_grad(&left[target], &right[positive], &neg_rows);
    descend(&mut right[positive], &grad.positive, lr);
    for (&n, g) in negs.iter().zip(&grad.negatives) {
        descend(&mut right[n], g, lr);
    }
    descend(&mut left[target], &grad.target, lr);
    grad.loss
}

/// Same as [`sgd_step`] with every vector taken from one matrix; `target`
/// must differ from `positive` and from every negative.
pub(crate) fn sgd_step_shared(
    rows: &mut [Vec<f64>],
    target: usize,
    positive: usize,
    negs: &[usize],
    lr: f64,
) -> f64 {
    let neg_rows: Vec<&[f64]> = negs.iter().map(|&n| rows[n].as_slice()).collect();
    let grad = sgns_loss_and_grad(&rows[target], &rows[positive], &neg_rows);
    descend(&mut rows[positive], &grad.positive, lr);
    for (&n, g) in negs.iter().zip(&grad.negatives) {
        descend(&mut rows[n], g, lr);
    }
    descend(&mut rows[target], &grad.target, lr);
    grad.loss
}

/// Skip-gram with negative sampling over a walk corpus. Every (center,
/// context) pair within `window` positions is one SGD step; training is
/// serial so a fixed seed reproduces the result bit for bit.
///
/// The returned losses are per-epoch means over all pairs.
pub fn skipgram_train(corpus: &WalkCorpus, node_ids: &[String], opts: &SkipGramOptions) -> Result<TrainingRun> {
    if corpus.walks.is_empty() || corpus.node_count() == 0 {
        return Err(Error::EmptyCorpus);
    }
    if opts.dim == 0 || opts.epochs == 0 || opts.window == 0 {
        return Err(Error::InvalidArgument("dim, window and epochs must be >= 1".into()));
    }
    if node_ids.len() != corpus.node_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} node ids for a corpus over {} nodes",
            node_ids.len(),
            corpus.node_count()
        )));
    }
    let n = corpus.node_count();
    let mut init_rng = rng_for(opts.seed, &[3]);
    let mut input = init_rows(n, opts.dim, &mut init_rng);
    let mut context = vec![vec![0.0; opts.dim]; n];
    let noise = noise_table(&corpus.degrees);

    let pairs_per_epoch: usize = corpus
        .walks
        .iter()
        .map(|w| {
            (0..w.len())
                .map(|i| i.min(opts.window) + (w.len() - 1 - i).min(opts.window))
                .sum::<usize>()
        })
        .sum();
    let total = (pairs_per_epoch * opts.epochs).max(1) as f64;
    let mut rng = rng_for(opts.seed, &[4]);
    let mut negs = Vec::with_capacity(opts.negatives);
    let mut done = 0usize;
    let mut losses = Vec::with_capacity(opts.epochs);
    for _ in 0..opts.epochs {
        let mut epoch_loss = 0.0;
        for walk in &corpus.walks {
            for (i, &center) in walk.iter().enumerate() {
                let lo = i.saturating_sub(opts.window);
                let hi = (i + opts.window).min(walk.len() - 1);
                for (j, &ctx) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    let lr = learning_rate(opts.lr_start, opts.lr_end, done as f64 / total);
                    draw_negatives(noise.as_ref(), opts.negatives, &[ctx], &mut rng, &mut negs);
                    epoch_loss += sgd_step(&mut input, &mut context, center, ctx, &negs, lr);
                    done += 1;
                }
            }
        }
        losses.push(epoch_loss / pairs_per_epoch.max(1) as f64);
    }
    log::info!("skip-gram seed={} epochs={} final_loss={:.6}", opts.seed, opts.epochs, losses.last().unwrap());
    Ok(TrainingRun {
        embedding: EmbeddingMatrix {
            node_ids: node_ids.to_vec(),
            dim: opts.dim,
            vectors: input,
            context_vectors: None,
        },
        losses,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::embed::random_walks;
    use crate::ingest::planted_partition;
    use rand_distr::{Distribution, Uniform};

    /// Max relative error of analytic vs central-difference gradients.
    pub(crate) fn fd_check(target: &[f64], positive: &[f64], negatives: &[Vec<f64>]) -> f64 {
        let h = 1e-5;
        let loss = |t: &[f64], p: &[f64], ns: &[Vec<f64>]| {
            let refs: Vec<&[f64]> = ns.iter().map(|v| v.as_slice()).collect();
            sgns_loss_and_grad(t, p, &refs).loss
        };
        let refs: Vec<&[f64]> = negatives.iter().map(|v| v.as_slice()).collect();
        let g = sgns_loss_and_grad(target, positive, &refs);
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-6);
        let mut worst: f64 = 0.0;
        for k in 0..target.len() {
            let (mut up, mut dn) = (target.to_vec(), target.to_vec());
            up[k] += h;
            dn[k] -= h;
            let fd = (loss(&up, positive, negatives) - loss(&dn, positive, negatives)) / (2.0 * h);
            worst = worst.max(rel(g.target[k], fd));
            let (mut up, mut dn) = (positive.to_vec(), positive.to_vec());
            up[k] += h;
            dn[k] -= h;
            let fd = (loss(target, &up, negatives) - loss(target, &dn, negatives)) / (2.0 * h);
            worst = worst.max(rel(g.positive[k], fd));
            for (m, gn) in g.negatives.iter().enumerate() {
                let (mut up, mut dn) = (negatives.to_vec(), negatives.to_vec());
                up[m][k] += h;
                dn[m][k] -= h;
                let fd = (loss(target, positive, &up) - loss(target, positive, &dn)) / (2.0 * h);
                worst = worst.max(rel(gn[k], fd));
            }
        }
        worst
    }

    pub(crate) fn random_vec(rng: &mut StageRng, dim: usize) -> Vec<f64> {
        let u = Uniform::new(-1.0, 1.0).unwrap();
        (0..dim).map(|_| u.sample(rng)).collect()
    }

    pub(crate) fn cosine_gap(e: &EmbeddingMatrix, labels: &[usize]) -> f64 {
        let cos = |a: &[f64], b: &[f64]| dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt());
        let (mut intra, mut ni, mut inter, mut nx) = (0.0, 0, 0.0, 0);
        for i in 0..labels.len() {
            for j in i + 1..labels.len() {
                let c = cos(&e.vectors[i], &e.vectors[j]);
                if labels[i] == labels[j] {
                    intra += c;
                    ni += 1;
                } else {
                    inter += c;
                    nx += 1;
                }
            }
        }
        intra / ni as f64 - inter / nx as f64
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rng_for(5, &[]);
        for _ in 0..20 {
            let t = random_vec(&mut rng, 8);
            let p = random_vec(&mut rng, 8);
            let ns: Vec<Vec<f64>> = (0..3).map(|_| random_vec(&mut rng, 8)).collect();
            assert!(fd_check(&t, &p, &ns) <= 1e-4);
        }
    }

    #[test]
    fn loss_is_stable_for_large_scores() {
        let g = sgns_loss_and_grad(&[100.0], &[100.0], &[&[-100.0]]);
        assert!(g.loss.is_finite() && g.loss >= 0.0);
        let g = sgns_loss_and_grad(&[100.0], &[-100.0], &[]);
        assert!((g.loss - 1e4).abs() < 1e-6);
    }

    #[test]
    fn loss_decreases_and_cliques_separate() {
        let (g, labels) = planted_partition(2, 30, 1.0, 0.0, 0);
        let corpus = random_walks(&g, 5, 20, 1).unwrap();
        let run = skipgram_train(&corpus, g.node_ids(), &SkipGramOptions { dim: 16, ..Default::default() }).unwrap();
        assert!(run.losses.iter().all(|l| l.is_finite()));
        assert!(run.losses.last().unwrap() < &run.losses[0]);
        assert!(cosine_gap(&run.embedding, &labels) >= 0.2);
    }

    #[test]
    fn deterministic() {
        let (g, _) = planted_partition(2, 10, 0.5, 0.05, 2);
        let corpus = random_walks(&g, 2, 10, 3).unwrap();
        let opts = SkipGramOptions { dim: 8, epochs: 2, ..Default::default() };
        let a = skipgram_train(&corpus, g.node_ids(), &opts).unwrap();
        let b = skipgram_train(&corpus, g.node_ids(), &opts).unwrap();
        assert_eq!(a.embedding, b.embedding);
    }

    #[test]
    fn empty_corpus() {
        let corpus = WalkCorpus { walks: vec![], walks_per_node: 1, walk_length: 1, degrees: vec![] };
        assert!(matches!(
            skipgram_train(&corpus, &[], &SkipGramOptions::default()),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn lr_schedule_is_linear() {
        assert_eq!(learning_rate(0.025, 0.0001, 0.0), 0.025);
        assert_eq!(learning_rate(0.025, 0.0001, 1.0), 0.0001);
        assert!((learning_rate(1.0, 0.0, 0.25) - 0.75).abs() < 1e-15);
    }
}
