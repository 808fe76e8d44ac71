//! Exact (quadratic) t-SNE.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Projection2D, ProjectionMethod};
use crate::error::{Error, Result};
use crate::rng::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneOptions {
    pub perplexity: f64,
    pub iters: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    /// Exaggeration is applied for iterations `0..exaggeration_iters`.
    pub exaggeration_iters: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch_iter: usize,
    /// Record the KL divergence every this many iterations (0 disables).
    pub kl_every: usize,
    pub seed: u64,
}

impl Default for TsneOptions {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iters: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch_iter: 250,
            kl_every: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TsneResult {
    pub projection: Projection2D,
    /// Symmetric joint probabilities, row-major N×N.
    pub p: Vec<f64>,
    /// Achieved entropy of each conditional row, in bits.
    pub row_entropy_bits: Vec<f64>,
    /// `(iterations completed, KL(P‖Q))` checkpoints.
    pub kl_history: Vec<(usize, f64)>,
}

const ENTROPY_TOL: f64 = 1e-10;
const MAX_BISECTIONS: usize = 200;

fn squared_distances(matrix: &DMatrix<f64>) -> Vec<f64> {
    let n = matrix.nrows();
    let rows: Vec<Vec<f64>> = matrix.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut out = vec![0.0; n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
        }
    });
    out
}

/// Gaussian conditional row for one point, returning (probabilities, entropy in nats).
fn conditional_row(dist: &[f64], i: usize, beta: f64) -> (Vec<f64>, f64) {
    let dmin = dist
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    let mut p: Vec<f64> = dist
        .iter()
        .enumerate()
        .map(|(j, &d)| if j == i { 0.0 } else { (-beta * (d - dmin)).exp() })
        .collect();
    let z: f64 = p.iter().sum();
    let mut weighted = 0.0;
    for (j, pj) in p.iter_mut().enumerate() {
        *pj /= z;
        if j != i {
            weighted += *pj * (dist[j] - dmin);
        }
    }
    (p, z.ln() + beta * weighted)
}

/// Binary search over the Gaussian precision so the row entropy matches
/// `ln(perplexity)`.
fn calibrate_row(dist: &[f64], i: usize, perplexity: f64) -> (Vec<f64>, f64) {
    let target = perplexity.ln();
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut beta = 1.0;
    let mut best = conditional_row(dist, i, beta);
    for _ in 0..MAX_BISECTIONS {
        let diff = best.1 - target;
        if diff.abs() < ENTROPY_TOL {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = 0.5 * (beta + lo);
        }
        best = conditional_row(dist, i, beta);
    }
    best
}

/// Symmetrized joint probabilities `P = (P_{j|i} + P_{i|j}) / 2N` together
/// with each row's achieved entropy in bits.
pub fn joint_probabilities(matrix: &DMatrix<f64>, perplexity: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = matrix.nrows();
    if !(perplexity > 0.0) || 3.0 * perplexity >= n as f64 {
        return Err(Error::PerplexityTooLarge { perplexity, n });
    }
    let dist = squared_distances(matrix);
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| calibrate_row(&dist[i * n..(i + 1) * n], i, perplexity))
        .collect();
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = (rows[i].0[j] + rows[j].0[i]) / (2.0 * n as f64);
        }
    }
    let entropies = rows
        .iter()
        .map(|(_, h)| h / std::f64::consts::LN_2)
        .collect();
    Ok((p, entropies))
}

/// Student-t kernel `1 / (1 + ‖y_i − y_j‖²)` for one row, and its sum.
fn kernel_row(y: &[[f64; 2]], i: usize, out: &mut [f64]) -> f64 {
    let mut sum = 0.0;
    for (j, o) in out.iter_mut().enumerate() {
        if j == i {
            *o = 0.0;
            continue;
        }
        let dx = y[i][0] - y[j][0];
        let dy = y[i][1] - y[j][1];
        *o = 1.0 / (1.0 + dx * dx + dy * dy);
        sum += *o;
    }
    sum
}

fn kernel_total(y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let partial: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| kernel_row(y, i, &mut vec![0.0; n]))
        .collect();
    partial.iter().sum()
}

/// KL(P‖Q) for an embedding `y`.
pub fn kl_divergence(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let z = kernel_total(y);
    let terms: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut k = vec![0.0; n];
            kernel_row(y, i, &mut k);
            (0..n)
                .filter(|&j| j != i && p[i * n + j] > 0.0)
                .map(|j| {
                    let pij = p[i * n + j];
                    pij * (pij / (k[j] / z)).ln()
                })
                .sum()
        })
        .collect();
    terms.iter().sum()
}

/// Gradient of KL(αP‖Q) with respect to each embedding coordinate.
pub fn kl_gradient(p: &[f64], y: &[[f64; 2]], exaggeration: f64) -> Vec<[f64; 2]> {
    let n = y.len();
    let z = kernel_total(y);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut k = vec![0.0; n];
            kernel_row(y, i, &mut k);
            let mut g = [0.0; 2];
            for j in 0..n {
                if j == i {
                    continue;
                }
                let coef = 4.0 * (exaggeration * p[i * n + j] - k[j] / z) * k[j];
                g[0] += coef * (y[i][0] - y[j][0]);
                g[1] += coef * (y[i][1] - y[j][1]);
            }
            g
        })
        .collect()
}

/// Embeds the rows of `matrix` in two dimensions.
pub fn tsne(matrix: &DMatrix<f64>, ids: &[String], opts: &TsneOptions) -> Result<TsneResult> {
    let n = matrix.nrows();
    if ids.len() != n {
        return Err(Error::DimensionMismatch(format!("{} ids for {n} rows", ids.len())));
    }
    let (p, row_entropy_bits) = joint_probabilities(matrix, opts.perplexity)?;
    log::info!("stage=tsne seed={} n={n} perplexity={}", opts.seed, opts.perplexity);

    let mut rng = rng_for(opts.seed, &[0x75e]);
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            [1e-4 * a, 1e-4 * b]
        })
        .collect();
    let mut velocity = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut kl_history = Vec::new();

    for iter in 0..opts.iters {
        let exaggeration = if iter < opts.exaggeration_iters {
            opts.early_exaggeration
        } else {
            1.0
        };
        let momentum = if iter < opts.momentum_switch_iter {
            opts.initial_momentum
        } else {
            opts.final_momentum
        };
        let grad = kl_gradient(&p, &y, exaggeration);
        for i in 0..n {
            for c in 0..2 {
                gains[i][c] = if (grad[i][c] > 0.0) != (velocity[i][c] > 0.0) {
                    gains[i][c] + 0.2
                } else {
                    (gains[i][c] * 0.8).max(0.01)
                };
                velocity[i][c] = momentum * velocity[i][c]
                    - opts.learning_rate * gains[i][c] * grad[i][c];
                y[i][c] += velocity[i][c];
            }
        }
        let mean = y.iter().fold([0.0; 2], |acc, r| [acc[0] + r[0], acc[1] + r[1]]);
        for r in &mut y {
            r[0] -= mean[0] / n as f64;
            r[1] -= mean[1] / n as f64;
        }
        let done = iter + 1;
        if opts.kl_every > 0 && (done % opts.kl_every == 0 || done == opts.iters) {
            kl_history.push((done, kl_divergence(&p, &y)));
        }
    }

    let mut params = BTreeMap::new();
    params.insert("perplexity".to_string(), opts.perplexity);
    params.insert("iters".to_string(), opts.iters as f64);
    params.insert("learning_rate".to_string(), opts.learning_rate);
    params.insert("seed".to_string(), opts.seed as f64);
    Ok(TsneResult {
        projection: Projection2D {
            ids: ids.to_vec(),
            coords: y,
            method: ProjectionMethod::Tsne,
            params,
        },
        p,
        row_entropy_bits,
        kl_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rng_for(seed, &[]);
        DMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn p_symmetric_and_normalized() {
        let m = random(40, 5, 1);
        let (p, h) = joint_probabilities(&m, 8.0).unwrap();
        let n = 40;
        for i in 0..n {
            assert_eq!(p[i * n + i], 0.0);
            for j in 0..n {
                assert_eq!(p[i * n + j], p[j * n + i]);
            }
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        for bits in h {
            assert!((bits - 8f64.log2()).abs() <= 1e-3);
        }
    }

    #[test]
    fn perplexity_too_large() {
        assert!(matches!(
            joint_probabilities(&random(30, 2, 0), 10.0),
            Err(Error::PerplexityTooLarge { .. })
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = random(6, 3, 4);
        let (p, _) = joint_probabilities(&m, 1.5).unwrap();
        let mut rng = rng_for(99, &[]);
        let y: Vec<[f64; 2]> = (0..6)
            .map(|_| [rng.sample(StandardNormal), rng.sample(StandardNormal)])
            .collect();
        let grad = kl_gradient(&p, &y, 1.0);
        let h = 1e-5;
        for i in 0..6 {
            for c in 0..2 {
                let mut plus = y.clone();
                let mut minus = y.clone();
                plus[i][c] += h;
                minus[i][c] -= h;
                let fd = (kl_divergence(&p, &plus) - kl_divergence(&p, &minus)) / (2.0 * h);
                let rel = (fd - grad[i][c]).abs() / fd.abs().max(grad[i][c].abs()).max(1e-8);
                assert!(rel <= 1e-4, "({i},{c}) fd={fd} analytic={}", grad[i][c]);
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let m = random(30, 4, 2);
        let ids: Vec<String> = (0..30).map(|i| i.to_string()).collect();
        let opts = TsneOptions {
            perplexity: 5.0,
            iters: 100,
            seed: 3,
            ..Default::default()
        };
        let a = tsne(&m, &ids, &opts).unwrap();
        let b = tsne(&m, &ids, &opts).unwrap();
        assert_eq!(a.projection.coords, b.projection.coords);
        assert!(a.projection.coords.iter().flatten().all(|v| v.is_finite()));
    }

    #[test]
    fn kl_falls_after_exaggeration() {
        let m = random(60, 5, 4);
        let ids: Vec<String> = (0..60).map(|i| i.to_string()).collect();
        let opts = TsneOptions { perplexity: 10.0, kl_every: 50, ..Default::default() };
        let res = tsne(&m, &ids, &opts).unwrap();
        let at = |it: usize| res.kl_history.iter().find(|(k, _)| *k == it).unwrap().1;
        let final_kl = kl_divergence(&res.p, &res.projection.coords);
        assert!((final_kl - at(1000)).abs() <= 1e-12);
        assert!(final_kl < at(500), "{final_kl} vs {}", at(500));
    }

    #[test]
    fn three_tight_blobs_recovered() {
        use crate::cluster::{adjusted_rand_index, kmeans, KMeansOptions};
        let mut rng = rng_for(12, &[]);
        let centers = [[0.0, 0.0], [10.0, 0.0], [5.0, 75f64.sqrt()]];
        let labels: Vec<usize> = (0..150).map(|i| i % 3).collect();
        let m = DMatrix::from_fn(150, 4, |i, j| {
            let c = if j < 2 { centers[labels[i]][j] } else { 0.0 };
            c + 0.1 * rng.sample::<f64, _>(StandardNormal)
        });
        let ids: Vec<String> = (0..150).map(|i| i.to_string()).collect();
        let res = tsne(&m, &ids, &TsneOptions::default()).unwrap();
        let model = kmeans(&res.projection.to_matrix(), 3, &KMeansOptions::default()).unwrap();
        assert!(adjusted_rand_index(&model.assignments, &labels).unwrap() >= 0.95);
    }
}
