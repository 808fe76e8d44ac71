use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Projection2D, ProjectionMethod};
use crate::error::{Error, Result};

/// A fitted principal component model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `r × d` orthonormal rows, ordered by decreasing variance.
    pub components: Vec<Vec<f64>>,
    /// Sample variance (denominator N−1) along each component.
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
}

/// Full principal axes of an already centered matrix.
pub(crate) struct Axes {
    /// Rows are unit vectors, sorted by decreasing singular value.
    pub components: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
}

impl Axes {
    pub fn rank(&self, n_rows: usize, n_cols: usize) -> usize {
        let top = self.singular_values.first().copied().unwrap_or(0.0);
        let tol = n_rows.max(n_cols) as f64 * f64::EPSILON * top;
        self.singular_values.iter().filter(|&&s| s > tol).count()
    }
}

pub(crate) fn centered(matrix: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let mean: Vec<f64> = matrix.column_iter().map(|c| c.mean()).collect();
    let mut c = matrix.clone();
    for (j, mut col) in c.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    (c, mean)
}

/// SVD of a centered matrix, with a deterministic sign per axis: the entry
/// of largest magnitude is positive (first such entry on ties).
pub(crate) fn principal_axes(centered: &DMatrix<f64>) -> Axes {
    let (n, d) = centered.shape();
    // Pad short matrices so V^T always has d rows.
    let padded;
    let input = if n < d {
        padded = centered.clone().resize_vertically(d, 0.0);
        &padded
    } else {
        centered
    };
    let svd = input.clone().svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut components = Vec::with_capacity(order.len());
    let mut singular_values = Vec::with_capacity(order.len());
    for &k in &order {
        let mut row: Vec<f64> = v_t.row(k).iter().copied().collect();
        let pivot = row
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, &x)| {
                if x.abs() > best.1.abs() {
                    (i, x)
                } else {
                    best
                }
            })
            .0;
        if row[pivot] < 0.0 {
            row.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(row);
        singular_values.push(svd.singular_values[k]);
    }
    Axes {
        components,
        singular_values,
    }
}

/// Fits `r` principal components via SVD of the centered data.
pub fn pca_fit(matrix: &DMatrix<f64>, r: usize) -> Result<PcaModel> {
    let (n, d) = matrix.shape();
    if n < 2 {
        return Err(Error::InvalidArgument("PCA needs at least 2 rows".into()));
    }
    if r == 0 || r > (n - 1).min(d) {
        return Err(Error::InvalidArgument(format!(
            "r = {r} must lie in [1, {}]",
            (n - 1).min(d)
        )));
    }
    let (c, mean) = centered(matrix);
    let axes = principal_axes(&c);
    let rank = axes.rank(n, d);
    if r > rank {
        return Err(Error::RankDeficient { requested: r, rank });
    }
    let variances: Vec<f64> = axes
        .singular_values
        .iter()
        .map(|s| s * s / (n - 1) as f64)
        .collect();
    let total: f64 = variances.iter().sum();
    Ok(PcaModel {
        mean,
        components: axes.components[..r].to_vec(),
        explained_variance: variances[..r].to_vec(),
        explained_variance_ratio: variances[..r].iter().map(|v| v / total).collect(),
    })
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Scores of every row on every component: `(X − mean) Pᵀ`.
    pub fn transform(&self, matrix: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let d = self.mean.len();
        if matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "model has {d} columns, input has {}",
                matrix.ncols()
            )));
        }
        let p = DMatrix::from_fn(self.n_components(), d, |k, j| self.components[k][j]);
        let mean = DVector::from_column_slice(&self.mean);
        let mut c = matrix.clone();
        for mut row in c.row_iter_mut() {
            row -= mean.transpose();
        }
        Ok(c * p.transpose())
    }

    /// Maps component scores back to the input space.
    pub fn inverse_transform(&self, scores: &DMatrix<f64>) -> DMatrix<f64> {
        let d = self.mean.len();
        let p = DMatrix::from_fn(self.n_components(), d, |k, j| self.components[k][j]);
        let mut x = scores * p;
        for mut row in x.row_iter_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v += self.mean[j];
            }
        }
        x
    }
}

/// Projects rows onto the first two components.
pub fn pca_project(model: &PcaModel, matrix: &DMatrix<f64>, ids: &[String]) -> Result<Projection2D> {
    if model.n_components() < 2 {
        return Err(Error::InvalidArgument(
            "projection needs a model with at least 2 components".into(),
        ));
    }
    if ids.len() != matrix.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} ids for {} rows",
            ids.len(),
            matrix.nrows()
        )));
    }
    let scores = model.transform(matrix)?;
    let mut params = BTreeMap::new();
    params.insert("evr0".to_string(), model.explained_variance_ratio[0]);
    params.insert("evr1".to_string(), model.explained_variance_ratio[1]);
    Ok(Projection2D {
        ids: ids.to_vec(),
        coords: (0..matrix.nrows())
            .map(|i| [scores[(i, 0)], scores[(i, 1)]])
            .collect(),
        method: ProjectionMethod::Pca,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rng_for(seed, &[]);
        DMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal))
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn line_data_single_component() {
        let m = DMatrix::from_fn(10, 2, |i, j| i as f64 * if j == 0 { 1.0 } else { 2.0 });
        let model = pca_fit(&m, 1).unwrap();
        let s = 5f64.sqrt();
        assert!((model.components[0][0] - 1.0 / s).abs() < 1e-12);
        assert!((model.components[0][1] - 2.0 / s).abs() < 1e-12);
        assert!((model.explained_variance_ratio[0] - 1.0).abs() < 1e-12);
        assert!(matches!(
            pca_fit(&m, 2),
            Err(Error::RankDeficient { requested: 2, rank: 1 })
        ));
    }

    #[test]
    fn full_rank_reconstruction_is_lossless() {
        let m = random(12, 4, 3);
        let model = pca_fit(&m, 4).unwrap();
        let back = model.inverse_transform(&model.transform(&m).unwrap());
        assert!((back - &m).abs().max() <= 1e-8);
    }

    #[test]
    fn components_orthonormal_and_ratios_sorted() {
        let model = pca_fit(&random(40, 6, 11), 5).unwrap();
        for a in 0..5 {
            for b in 0..5 {
                let dot: f64 = (0..6).map(|j| model.components[a][j] * model.components[b][j]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10);
            }
        }
        assert!(model.explained_variance_ratio.windows(2).all(|w| w[0] >= w[1]));
        assert!(model.explained_variance_ratio.iter().sum::<f64>() <= 1.0 + 1e-12);
    }

    #[test]
    fn projection_examples() {
        let m = random(30, 3, 5);
        let model = pca_fit(&m, 2).unwrap();
        let mean = DMatrix::from_row_slice(1, 3, &model.mean);
        let p = pca_project(&model, &mean, &ids(1)).unwrap();
        assert!(p.coords[0][0].abs() < 1e-12 && p.coords[0][1].abs() < 1e-12);
        let shifted = DMatrix::from_fn(1, 3, |_, j| model.mean[j] + model.components[0][j]);
        let p = pca_project(&model, &shifted, &ids(1)).unwrap();
        assert!((p.coords[0][0] - 1.0).abs() < 1e-12 && p.coords[0][1].abs() < 1e-12);
        assert!(matches!(
            pca_project(&model, &DMatrix::zeros(1, 2), &ids(1)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn translation_invariance() {
        let m = random(25, 4, 9);
        let shifted = m.map(|v| v + 3.5);
        let a = pca_fit(&m, 2).unwrap();
        let b = pca_fit(&shifted, 2).unwrap();
        for (x, y) in a.components.iter().flatten().zip(b.components.iter().flatten()) {
            assert!((x - y).abs() < 1e-9);
        }
        for (x, y) in a.mean.iter().zip(&b.mean) {
            assert!((y - x - 3.5).abs() < 1e-12);
        }
        let pa = pca_project(&a, &m, &ids(25)).unwrap();
        let pb = pca_project(&b, &shifted, &ids(25)).unwrap();
        for (x, y) in pa.coords.iter().zip(&pb.coords) {
            assert!((x[0] - y[0]).abs() <= 1e-9 && (x[1] - y[1]).abs() <= 1e-9);
        }
    }

    #[test]
    fn wide_matrix() {
        let m = random(3, 5, 2);
        let model = pca_fit(&m, 2).unwrap();
        assert_eq!(model.components[0].len(), 5);
    }

    #[test]
    fn variances_match_covariance_eigenvalues() {
        let m = random(40, 6, 21);
        let model = pca_fit(&m, 6).unwrap();
        let (c, _) = centered(&m);
        let cov = c.transpose() * &c / 39.0;
        let mut eig: Vec<f64> = cov.symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let total: f64 = eig.iter().sum();
        for (k, want) in eig.iter().enumerate() {
            let got = model.explained_variance[k];
            assert!((got - want).abs() <= 1e-8 * want, "{k}: {got} vs {want}");
            assert!((model.explained_variance_ratio[k] - want / total).abs() <= 1e-8 * want / total);
        }
    }

    #[test]
    fn projected_variances_are_top_two() {
        let m = random(50, 5, 8);
        let model = pca_fit(&m, 2).unwrap();
        let p = pca_project(&model, &m, &ids(50)).unwrap();
        for axis in 0..2 {
            let mean: f64 = p.coords.iter().map(|c| c[axis]).sum::<f64>() / 50.0;
            let var: f64 = p.coords.iter().map(|c| (c[axis] - mean).powi(2)).sum::<f64>() / 49.0;
            let want = model.explained_variance[axis];
            assert!((var - want).abs() <= 1e-8 * want, "{axis}: {var} vs {want}");
        }
    }
}
