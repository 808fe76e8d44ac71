//! Attribute scoring by redundancy (average correlation), multicollinearity
//! (VIF) and principal-component contribution.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dimred::principal_axes;
use crate::error::{Error, Result};

/// R² at or above `1 − COLLINEAR_EPS` is treated as perfect collinearity.
pub const COLLINEAR_EPS: f64 = 1e-12;

/// Share of variance covered by the components that enter the PCA contribution.
pub const PCA_RETAINED_VARIANCE: f64 = 0.9;

const RANGE_EPS: f64 = 1e-9;

/// How the three normalized metrics combine into a single score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreFormula {
    /// `(1 − corr) + (1 − vif) + (1 − pca)`; reproduces the published ranking table.
    #[default]
    Table,
    /// `corr + (1 − vif) + (1 − pca)`.
    Prose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub feature: String,
    pub avg_correlation: f64,
    /// `f64::INFINITY` for a perfectly collinear column.
    pub vif: f64,
    pub pca_contribution: f64,
    pub norm_corr: f64,
    pub norm_vif: f64,
    pub norm_pca: f64,
    pub score: f64,
}

fn check_column(matrix: &DMatrix<f64>, column: usize) -> Result<()> {
    if column >= matrix.ncols() {
        return Err(Error::InvalidArgument(format!(
            "column {column} out of range for {} columns",
            matrix.ncols()
        )));
    }
    Ok(())
}

fn centered_column(matrix: &DMatrix<f64>, j: usize) -> DVector<f64> {
    let col = matrix.column(j);
    col.add_scalar(-col.mean())
}

/// Mean absolute Pearson correlation of `column` with every other column.
/// A zero-variance counterpart contributes 0.
pub fn average_correlation(matrix: &DMatrix<f64>, column: usize) -> Result<f64> {
    let (n, d) = matrix.shape();
    if n < 2 || d < 2 {
        return Err(Error::InvalidArgument(
            "average correlation needs at least 2 rows and 2 columns".into(),
        ));
    }
    check_column(matrix, column)?;
    let x = centered_column(matrix, column);
    let sx = x.norm();
    if sx == 0.0 {
        return Err(Error::DegenerateColumn(column));
    }
    let total: f64 = (0..d)
        .filter(|&j| j != column)
        .map(|j| {
            let y = centered_column(matrix, j);
            let sy = y.norm();
            if sy == 0.0 {
                0.0
            } else {
                (x.dot(&y) / (sx * sy)).abs().min(1.0)
            }
        })
        .sum();
    Ok(total / (d - 1) as f64)
}

/// Variance inflation factor `1 / (1 − R²)` from regressing `column` on the
/// remaining columns plus an intercept.
pub fn vif(matrix: &DMatrix<f64>, column: usize) -> Result<f64> {
    let (n, d) = matrix.shape();
    check_column(matrix, column)?;
    if n < 2 {
        return Err(Error::InvalidArgument("VIF needs at least 2 rows".into()));
    }
    let y = centered_column(matrix, column);
    let sst = y.norm_squared();
    if sst == 0.0 {
        return Err(Error::DegenerateColumn(column));
    }
    if d == 1 {
        return Ok(1.0);
    }
    // Centering every column absorbs the intercept.
    let others: Vec<usize> = (0..d).filter(|&j| j != column).collect();
    let x = DMatrix::from_fn(n, others.len(), |i, k| {
        matrix[(i, others[k])] - matrix.column(others[k]).mean()
    });
    let svd = x.clone().svd(true, true);
    let tol = f64::EPSILON * n.max(d) as f64 * svd.singular_values.max();
    let beta = svd
        .solve(&y, tol)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let ssr = (&y - &x * beta).norm_squared();
    let r2 = 1.0 - ssr / sst;
    if r2 >= 1.0 - COLLINEAR_EPS {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / (1.0 - r2))
}

/// Explained-variance-weighted squared loadings for every column of the
/// z-scored matrix, summed over the leading components that together
/// explain [`PCA_RETAINED_VARIANCE`] of the variance. Summing over every
/// component would give exactly `1/d` for each column.
pub fn pca_contributions(matrix: &DMatrix<f64>) -> Vec<f64> {
    let (n, d) = matrix.shape();
    if d == 0 {
        return Vec::new();
    }
    let mut z = matrix.clone();
    for mut col in z.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        let sd = (col.norm_squared() / n as f64).sqrt();
        if sd > 0.0 {
            col /= sd;
        } else {
            col.fill(0.0);
        }
    }
    let axes = principal_axes(&z);
    let variances: Vec<f64> = axes.singular_values.iter().map(|s| s * s).collect();
    let total: f64 = variances.iter().sum();
    if total == 0.0 {
        return vec![0.0; d];
    }
    let ratios: Vec<f64> = variances.iter().map(|v| v / total).collect();
    let retained = retained_components(&ratios);
    (0..d)
        .map(|j| {
            axes.components[..retained]
                .iter()
                .zip(&ratios)
                .map(|(row, r)| r * row[j] * row[j])
                .sum()
        })
        .collect()
}

/// Smallest number of leading components whose ratios reach the retained share.
pub(crate) fn retained_components(ratios: &[f64]) -> usize {
    let mut cum = 0.0;
    for (k, r) in ratios.iter().enumerate() {
        cum += r;
        if cum >= PCA_RETAINED_VARIANCE - 1e-12 {
            return k + 1;
        }
    }
    ratios.len()
}

pub fn pca_contribution(matrix: &DMatrix<f64>, column: usize) -> Result<f64> {
    check_column(matrix, column)?;
    Ok(pca_contributions(matrix)[column])
}

/// Scales values to `[0, 1]`. `+∞` entries take the largest finite value
/// first; a constant batch (up to rounding) maps to all zeros.
pub fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let finite_max = values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let clamped: Vec<f64> = values
        .iter()
        .map(|&v| if v == f64::INFINITY { finite_max } else { v })
        .collect();
    let min = clamped.iter().copied().fold(f64::INFINITY, f64::min);
    let max = clamped.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // Spreads at rounding level count as constant.
    if !(max - min > RANGE_EPS * max.abs().max(min.abs())) || !min.is_finite() {
        return vec![0.0; values.len()];
    }
    clamped.iter().map(|v| (v - min) / (max - min)).collect()
}

pub fn composite_score(norm_pca: f64, norm_vif: f64, norm_corr: f64, formula: ScoreFormula) -> f64 {
    let corr_term = match formula {
        ScoreFormula::Table => 1.0 - norm_corr,
        ScoreFormula::Prose => norm_corr,
    };
    corr_term + (1.0 - norm_vif) + (1.0 - norm_pca)
}

/// Descending by score; equal scores ordered by feature name.
pub fn sort_scores(scores: &mut [FeatureScore]) {
    scores.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.feature.cmp(&b.feature))
    });
}

/// Scores every column and returns them best first.
pub fn rank_features(
    matrix: &DMatrix<f64>,
    names: &[String],
    formula: ScoreFormula,
) -> Result<Vec<FeatureScore>> {
    let d = matrix.ncols();
    if d < 2 {
        return Err(Error::InvalidArgument("ranking needs at least 2 columns".into()));
    }
    if names.len() != d {
        return Err(Error::DimensionMismatch(format!("{} names for {d} columns", names.len())));
    }
    let corr = (0..d)
        .map(|j| average_correlation(matrix, j))
        .collect::<Result<Vec<_>>>()?;
    let vifs = (0..d).map(|j| vif(matrix, j)).collect::<Result<Vec<_>>>()?;
    let pca = pca_contributions(matrix);
    let (nc, nv, np) = (
        min_max_normalize(&corr),
        min_max_normalize(&vifs),
        min_max_normalize(&pca),
    );
    let mut scores: Vec<FeatureScore> = (0..d)
        .map(|j| FeatureScore {
            feature: names[j].clone(),
            avg_correlation: corr[j],
            vif: vifs[j],
            pca_contribution: pca[j],
            norm_corr: nc[j],
            norm_vif: nv[j],
            norm_pca: np[j],
            score: composite_score(np[j], nv[j], nc[j], formula),
        })
        .collect();
    sort_scores(&mut scores);
    Ok(scores)
}

/// Writes `feature,norm_pca,norm_vif,norm_corr,score` rows.
pub fn write_scores_csv<W: std::io::Write>(scores: &[FeatureScore], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["feature", "norm_pca", "norm_vif", "norm_corr", "score"])?;
    for s in scores {
        w.write_record([
            s.feature.clone(),
            format!("{:.6}", s.norm_pca),
            format!("{:.6}", s.norm_vif),
            format!("{:.6}", s.norm_corr),
            format!("{:.6}", s.score),
        ])?;
    }
    w.flush()?;
    Ok(())
}
