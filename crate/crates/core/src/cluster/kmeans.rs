use indexmap::IndexMap;
use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::TimeSeriesTensor;
use crate::rng::{derive_seed, rng_for};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMethod {
    #[default]
    #[serde(rename = "kmeans++")]
    KMeansPlusPlus,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansOptions {
    pub max_iter: usize,
    /// Converged once no centroid moves farther than this (Euclidean).
    pub tol: f64,
    pub n_init: usize,
    pub seed: u64,
    pub init: InitMethod,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tol: 1e-6,
            n_init: 10,
            seed: 0,
            init: InitMethod::KMeansPlusPlus,
        }
    }
}

/// Centroids, hard assignments and the within-cluster sum of squares.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    /// Shape of one centroid: `[T, d]` for series, `[d]` for vectors.
    pub centroid_shape: Vec<usize>,
    /// K flattened centroids.
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub objective: f64,
    pub iterations_run: usize,
    pub converged: bool,
    /// Objective after every assignment and every update step of the kept run.
    pub objective_trace: Vec<f64>,
    pub seed: u64,
}

impl ClusterModel {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Sum over points of the squared distance to their assigned centroid.
pub fn objective(data: &[f64], dim: usize, centroids: &[Vec<f64>], assignments: &[usize]) -> f64 {
    data.chunks_exact(dim)
        .zip(assignments)
        .map(|(p, &a)| sq_dist(p, &centroids[a]))
        .sum()
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if k == 0 {
        return Err(Error::InvalidArgument("K must be >= 1".into()));
    }
    if k > n {
        return Err(Error::KTooLarge { k, n });
    }
    Ok(())
}

/// Picks K starting centroids from the rows of `data`.
///
/// k-means++ draws the first centroid uniformly and each later one with
/// probability proportional to its squared distance from the nearest centroid
/// chosen so far; zero-distance points are never drawn while positive ones remain.
pub fn init_centroids(
    data: &[f64],
    dim: usize,
    k: usize,
    method: InitMethod,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if dim == 0 || !data.len().is_multiple_of(dim) {
        return Err(Error::DimensionMismatch(format!(
            "{} values do not split into rows of {dim}",
            data.len()
        )));
    }
    let n = data.len() / dim;
    check_k(n, k)?;
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut rng = rng_for(seed, &[0x1d1]);
    match method {
        InitMethod::Random => Ok(sample(&mut rng, n, k)
            .into_iter()
            .map(|i| row(i).to_vec())
            .collect()),
        InitMethod::KMeansPlusPlus => {
            let first = rng.random_range(0..n);
            let mut centroids = vec![row(first).to_vec()];
            let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(row(i), row(first))).collect();
            while centroids.len() < k {
                let total: f64 = d2.iter().sum();
                let pick = if total > 0.0 {
                    let target = rng.random::<f64>() * total;
                    let mut acc = 0.0;
                    let mut chosen = None;
                    let mut last_positive = 0;
                    for (i, &w) in d2.iter().enumerate() {
                        if w > 0.0 {
                            acc += w;
                            last_positive = i;
                            if target < acc {
                                chosen = Some(i);
                                break;
                            }
                        }
                    }
                    chosen.unwrap_or(last_positive)
                } else {
                    rng.random_range(0..n)
                };
                let c = row(pick).to_vec();
                for (i, w) in d2.iter_mut().enumerate() {
                    *w = w.min(sq_dist(row(i), &c));
                }
                centroids.push(c);
            }
            Ok(centroids)
        }
    }
}

fn assign(data: &[f64], dim: usize, centroids: &[Vec<f64>]) -> Vec<usize> {
    data.par_chunks_exact(dim)
        .map(|p| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (k, c) in centroids.iter().enumerate() {
                let d = sq_dist(p, c);
                if d < best_d {
                    best_d = d;
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// Recomputes centroids as member means. An empty cluster takes over the
/// point farthest from its own centroid (among clusters with >1 member).
fn update(data: &[f64], dim: usize, k: usize, assignments: &mut [usize]) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in data.chunks_exact(dim).zip(assignments.iter()) {
        counts[a] += 1;
        sums[a].iter_mut().zip(p).for_each(|(s, x)| *s += x);
    }
    let mean = |sum: &[f64], count: usize| -> Vec<f64> {
        sum.iter().map(|s| s / count as f64).collect()
    };
    let mut centroids: Vec<Vec<f64>> = (0..k)
        .map(|c| {
            if counts[c] > 0 {
                mean(&sums[c], counts[c])
            } else {
                vec![0.0; dim]
            }
        })
        .collect();
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = f64::NEG_INFINITY;
        for (i, p) in data.chunks_exact(dim).enumerate() {
            let a = assignments[i];
            if counts[a] < 2 {
                continue;
            }
            let d = sq_dist(p, &centroids[a]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let Some(i) = far else { break };
        let donor = assignments[i];
        let p = &data[i * dim..(i + 1) * dim];
        sums[donor].iter_mut().zip(p).for_each(|(s, x)| *s -= x);
        counts[donor] -= 1;
        centroids[donor] = mean(&sums[donor], counts[donor]);
        sums[empty] = p.to_vec();
        counts[empty] = 1;
        centroids[empty] = p.to_vec();
        assignments[i] = empty;
    }
    centroids
}

/// Lloyd iterations from the given starting centroids.
pub fn lloyd(
    data: &[f64],
    dim: usize,
    initial: Vec<Vec<f64>>,
    max_iter: usize,
    tol: f64,
) -> Result<ClusterModel> {
    if dim == 0 || !data.len().is_multiple_of(dim) {
        return Err(Error::DimensionMismatch(format!(
            "{} values do not split into rows of {dim}",
            data.len()
        )));
    }
    let k = initial.len();
    check_k(data.len() / dim, k)?;
    if initial.iter().any(|c| c.len() != dim) {
        return Err(Error::DimensionMismatch("centroid length differs from row length".into()));
    }
    if max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
    }
    let mut centroids = initial;
    let mut assignments = Vec::new();
    let mut trace = Vec::with_capacity(2 * max_iter);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        assignments = assign(data, dim, &centroids);
        trace.push(objective(data, dim, &centroids, &assignments));
        let next = update(data, dim, k, &mut assignments);
        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        trace.push(objective(data, dim, &centroids, &assignments));
        if shift <= tol {
            converged = true;
            break;
        }
    }
    Ok(ClusterModel {
        k,
        centroid_shape: vec![dim],
        objective: *trace.last().expect("at least one iteration"),
        centroids,
        assignments,
        iterations_run: iterations,
        converged,
        objective_trace: trace,
        seed: 0,
    })
}

/// Best-of-restarts Lloyd over rows of length `dim`.
fn fit(data: &[f64], dim: usize, k: usize, opts: &KMeansOptions, shape: Vec<usize>) -> Result<ClusterModel> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("input contains non-finite values".into()));
    }
    check_k(data.len() / dim, k)?;
    let restarts = opts.n_init.max(1);
    let runs = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(opts.seed, &[r as u64]);
            let init = init_centroids(data, dim, k, opts.init, seed)?;
            lloyd(data, dim, init, opts.max_iter, opts.tol)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = runs
        .into_iter()
        .reduce(|best, run| if run.objective < best.objective { run } else { best })
        .expect("at least one restart");
    best.centroid_shape = shape;
    best.seed = opts.seed;
    Ok(best)
}

/// k-means over the rows of an N×d matrix.
pub fn kmeans(matrix: &DMatrix<f64>, k: usize, opts: &KMeansOptions) -> Result<ClusterModel> {
    let (n, d) = matrix.shape();
    if n == 0 || d == 0 {
        return Err(Error::EmptyInput);
    }
    let rows: Vec<f64> = matrix.transpose().as_slice().to_vec();
    log::info!("stage=kmeans seed={} k={k} n={n}", opts.seed);
    fit(&rows, d, k, opts, vec![d])
}

/// k-means over whole multivariate series: the distance between two players
/// is the squared Euclidean distance summed over every time point.
pub fn ts_kmeans(tensor: &TimeSeriesTensor, k: usize, opts: &KMeansOptions) -> Result<ClusterModel> {
    let dim = tensor.n_times() * tensor.n_features();
    if tensor.n_players() == 0 || dim == 0 {
        return Err(Error::EmptyInput);
    }
    log::info!("stage=ts_kmeans seed={} k={k} n={}", opts.seed, tensor.n_players());
    fit(
        tensor.values(),
        dim,
        k,
        opts,
        vec![tensor.n_times(), tensor.n_features()],
    )
}

/// On-disk form of a [`ClusterModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModelFile {
    #[serde(rename = "K")]
    pub k: usize,
    pub centroids: serde_json::Value,
    pub assignments: IndexMap<String, usize>,
    pub objective: f64,
    pub iterations_run: usize,
    pub converged: bool,
    pub seed: u64,
}

impl ClusterModelFile {
    pub fn from_model(model: &ClusterModel, ids: &[String]) -> Result<Self> {
        if ids.len() != model.assignments.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} ids for {} assignments",
                ids.len(),
                model.assignments.len()
            )));
        }
        let centroids = match model.centroid_shape.as_slice() {
            [_, d] => serde_json::to_value(
                model
                    .centroids
                    .iter()
                    .map(|c| c.chunks(*d).map(<[f64]>::to_vec).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
            )?,
            _ => serde_json::to_value(&model.centroids)?,
        };
        Ok(Self {
            k: model.k,
            centroids,
            assignments: ids.iter().cloned().zip(model.assignments.iter().copied()).collect(),
            objective: model.objective,
            iterations_run: model.iterations_run,
            converged: model.converged,
            seed: model.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    #[test]
    fn identical_series_single_cluster() {
        let t = TimeSeriesTensor::new(
            (0..5).map(|i| i.to_string()).collect(),
            vec![
                NaiveDate::from_ymd_opt(2023, 1, 1).unwrap(),
                NaiveDate::from_ymd_opt(2023, 1, 8).unwrap(),
            ],
            vec!["a".into(), "b".into()],
            [1.0, 2.0, 3.0, 4.0].repeat(5),
        )
        .unwrap();
        let m = ts_kmeans(&t, 1, &KMeansOptions::default()).unwrap();
        assert_eq!(m.centroids[0], vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.objective, 0.0);
        assert_eq!(m.centroid_shape, vec![2, 2]);
    }

    #[test]
    fn k_equals_n_zero_objective() {
        let m = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 5.0, -3.0, 2.0, 7.0, 7.0]);
        let model = kmeans(&m, 4, &KMeansOptions::default()).unwrap();
        assert_eq!(model.objective, 0.0);
        let mut seen = model.assignments.clone();
        seen.sort();
        assert_eq!(seen, vec![0, 1, 2, 3]);
    }

    #[test]
    fn separated_points() {
        let m = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 0.0, 1.0, 10.0, 10.0, 10.0, 11.0]);
        let model = kmeans(&m, 2, &KMeansOptions::default()).unwrap();
        let a = &model.assignments;
        assert_eq!(a[0], a[1]);
        assert_eq!(a[2], a[3]);
        assert_ne!(a[0], a[2]);
        assert!((model.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_cluster_is_mean() {
        let m = DMatrix::from_row_slice(3, 2, &[0.0, 3.0, 3.0, 0.0, 6.0, 6.0]);
        let model = kmeans(&m, 1, &KMeansOptions::default()).unwrap();
        assert_eq!(model.centroids[0], vec![3.0, 3.0]);
    }

    #[test]
    fn errors() {
        let m = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        assert!(matches!(
            kmeans(&m, 3, &KMeansOptions::default()),
            Err(Error::KTooLarge { k: 3, n: 2 })
        ));
        assert!(matches!(
            kmeans(&DMatrix::zeros(0, 2), 1, &KMeansOptions::default()),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn kmeanspp_covers_all_distinct_points() {
        let data = [0.0, 0.0, 5.0, 5.0, 9.0, 9.0, 0.0, 0.0, 5.0, 5.0, 9.0, 9.0];
        for seed in 0..50 {
            let mut c = init_centroids(&data, 2, 3, InitMethod::KMeansPlusPlus, seed).unwrap();
            c.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(c, vec![vec![0.0, 0.0], vec![5.0, 5.0], vec![9.0, 9.0]]);
        }
    }

    #[test]
    fn init_deterministic_and_duplicate_point() {
        let data: Vec<f64> = (0..40).map(|i| (i * 7 % 13) as f64).collect();
        for method in [InitMethod::KMeansPlusPlus, InitMethod::Random] {
            assert_eq!(
                init_centroids(&data, 2, 5, method, 11).unwrap(),
                init_centroids(&data, 2, 5, method, 11).unwrap()
            );
        }
        let dup = [3.0, 4.0].repeat(6);
        assert_eq!(
            init_centroids(&dup, 2, 1, InitMethod::KMeansPlusPlus, 0).unwrap(),
            vec![vec![3.0, 4.0]]
        );
        assert!(matches!(
            init_centroids(&dup, 2, 7, InitMethod::Random, 0),
            Err(Error::KTooLarge { .. })
        ));
    }

    #[test]
    fn empty_cluster_reseeded() {
        // both initial centroids far from data on the same side; one starts empty
        let data = [0.0, 1.0, 2.0, 10.0, 11.0, 12.0];
        let model = lloyd(&data, 1, vec![vec![100.0], vec![200.0]], 50, 0.0).unwrap();
        assert!(model.cluster_sizes().iter().all(|&s| s > 0));
        assert!((model.objective - 4.0).abs() < 1e-12);
        assert!(model.objective_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let data = [1.0];
        let model = lloyd(&data, 1, vec![vec![1.0]], 5, 0.0).unwrap();
        assert_eq!(model.assignments, vec![0]);
        let data = [0.0, 2.0];
        assert_eq!(assign(&data, 1, &[vec![1.0], vec![1.0]]), vec![0, 0]);
    }

    #[test]
    fn file_round_trip_shapes() {
        let m = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 0.0, 1.0, 10.0, 10.0, 10.0, 11.0]);
        let model = kmeans(&m, 2, &KMeansOptions { seed: 4, ..Default::default() }).unwrap();
        let ids: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let file = ClusterModelFile::from_model(&model, &ids).unwrap();
        let json = serde_json::to_string(&file).unwrap();
        assert!(json.starts_with("{\"K\":2,\"centroids\":[["));
        assert!(json.contains("\"assignments\":{\"a\":"));
        let back: ClusterModelFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, file);
    }
}
