//! Per-cluster feature summaries and density curves on globally [0,1]
//! normalized features; the JSON written here is what the UI renders.

use indexmap::IndexMap;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 64;

/// Bandwidth used when the sample standard deviation is zero.
pub const DEGENERATE_BANDWIDTH: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Type-7 quantile of sorted data: interpolate at position `(n−1)·p`.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

pub fn summarize(values: &[f64]) -> Result<FeatureSummary> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("summarize: NaN value".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(FeatureSummary {
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bandwidth {
    /// `σ̂·n^(−1/5)` with the sample standard deviation.
    #[default]
    Scott,
    Fixed(f64),
}

impl Bandwidth {
    pub fn resolve(self, values: &[f64]) -> f64 {
        match self {
            Bandwidth::Fixed(h) => h,
            Bandwidth::Scott => {
                let n = values.len() as f64;
                let sd = if values.len() < 2 {
                    0.0
                } else {
                    let mean = values.iter().sum::<f64>() / n;
                    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
                };
                if sd > 0.0 {
                    sd * n.powf(-0.2)
                } else {
                    DEGENERATE_BANDWIDTH
                }
            }
        }
    }
}

/// Gaussian KDE evaluated on `grid_points` evenly spaced positions over [0,1].
pub fn kde(values: &[f64], grid_points: usize, bandwidth: Bandwidth) -> Result<Vec<[f64; 2]>> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if grid_points < 2 {
        return Err(Error::InvalidArgument("kde needs at least 2 grid points".into()));
    }
    let h = bandwidth.resolve(values);
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("bandwidth {h} must be > 0")));
    }
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    Ok((0..grid_points)
        .map(|k| {
            let x = k as f64 / (grid_points - 1) as f64;
            let sum: f64 = values
                .iter()
                .map(|v| (-0.5 * ((x - v) / h).powi(2)).exp())
                .sum();
            [x, norm * sum]
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: f64,
    pub max: f64,
}

impl Normalization {
    pub fn apply(&self, v: f64) -> f64 {
        if self.max > self.min {
            (v - self.min) / (self.max - self.min)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterEntry {
    pub id: usize,
    pub size: usize,
    /// `None` for an empty cluster.
    pub stats: IndexMap<String, Option<FeatureSummary>>,
    pub density: IndexMap<String, Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub features: Vec<String>,
    pub normalization: IndexMap<String, Normalization>,
    pub clusters: Vec<ClusterEntry>,
}

/// Normalizes each column globally to [0,1], then summarizes and estimates
/// the density of every (cluster, feature) pair. Clusters `0..k` appear in
/// order; one without members has size 0, null stats and empty densities.
pub fn build_report(
    matrix: &DMatrix<f64>,
    feature_names: &[String],
    assignments: &[usize],
    k: usize,
) -> Result<ClusterReport> {
    let (n, d) = matrix.shape();
    if feature_names.len() != d {
        return Err(Error::DimensionMismatch(format!("{} names for {d} columns", feature_names.len())));
    }
    if assignments.len() != n {
        return Err(Error::DimensionMismatch(format!("{} assignments for {n} rows", assignments.len())));
    }
    if let Some(bad) = assignments.iter().find(|&&a| a >= k) {
        return Err(Error::DimensionMismatch(format!("assignment {bad} outside 0..{k}")));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("report input contains non-finite values".into()));
    }
    let norms: Vec<Normalization> = matrix
        .column_iter()
        .map(|c| Normalization {
            min: c.min(),
            max: c.max(),
        })
        .collect();
    let cells: Vec<(usize, usize)> = (0..k).flat_map(|c| (0..d).map(move |j| (c, j))).collect();
    let computed: Vec<(Option<FeatureSummary>, Vec<[f64; 2]>)> = cells
        .par_iter()
        .map(|&(c, j)| {
            let values: Vec<f64> = (0..n)
                .filter(|&i| assignments[i] == c)
                .map(|i| norms[j].apply(matrix[(i, j)]))
                .collect();
            if values.is_empty() {
                return Ok((None, Vec::new()));
            }
            Ok((
                Some(summarize(&values)?),
                kde(&values, DEFAULT_GRID_POINTS, Bandwidth::Scott)?,
            ))
        })
        .collect::<Result<_>>()?;
    let mut computed = computed.into_iter();
    let clusters = (0..k)
        .map(|c| {
            let mut stats = IndexMap::new();
            let mut density = IndexMap::new();
            for name in feature_names {
                let (s, dens) = computed.next().expect("one cell per (cluster, feature)");
                stats.insert(name.clone(), s);
                density.insert(name.clone(), dens);
            }
            ClusterEntry {
                id: c,
                size: assignments.iter().filter(|&&a| a == c).count(),
                stats,
                density,
            }
        })
        .collect();
    Ok(ClusterReport {
        features: feature_names.to_vec(),
        normalization: feature_names.iter().cloned().zip(norms).collect(),
        clusters,
    })
}

fn schema_error(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(format!("report schema: {}", msg.into()))
}

fn number(v: &Value, what: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| schema_error(format!("{what} must be a number")))
}

fn object<'a>(v: &'a Value, what: &str) -> Result<&'a serde_json::Map<String, Value>> {
    v.as_object().ok_or_else(|| schema_error(format!("{what} must be an object")))
}

fn keys_match(map: &serde_json::Map<String, Value>, features: &[&str], what: &str) -> Result<()> {
    if map.len() != features.len() || features.iter().any(|f| !map.contains_key(*f)) {
        return Err(schema_error(format!("{what} keys must equal the feature list")));
    }
    Ok(())
}

/// Checks a parsed report against the UI contract: exact field names, one
/// entry per feature, ordered summary chains and densities on [0,1].
pub fn validate_report_json(report: &Value) -> Result<()> {
    let root = object(report, "report")?;
    let mut top: Vec<&str> = root.keys().map(String::as_str).collect();
    top.sort_unstable();
    if top != ["clusters", "features", "normalization"] {
        return Err(schema_error(format!("unexpected top-level keys {top:?}")));
    }
    let features: Vec<&str> = root["features"]
        .as_array()
        .ok_or_else(|| schema_error("features must be an array"))?
        .iter()
        .map(|f| f.as_str().ok_or_else(|| schema_error("feature names must be strings")))
        .collect::<Result<_>>()?;
    let norm = object(&root["normalization"], "normalization")?;
    keys_match(norm, &features, "normalization")?;
    for (f, v) in norm {
        let o = object(v, f)?;
        if o.len() != 2 || number(&o["min"], "min")? > number(&o["max"], "max")? {
            return Err(schema_error(format!("normalization of {f} must be {{min <= max}}")));
        }
    }
    let clusters = root["clusters"]
        .as_array()
        .ok_or_else(|| schema_error("clusters must be an array"))?;
    for (pos, c) in clusters.iter().enumerate() {
        let c = object(c, "cluster")?;
        let mut keys: Vec<&str> = c.keys().map(String::as_str).collect();
        keys.sort_unstable();
        if keys != ["density", "id", "size", "stats"] {
            return Err(schema_error(format!("cluster keys {keys:?}")));
        }
        if c["id"].as_u64() != Some(pos as u64) {
            return Err(schema_error("cluster ids must be 0, 1, ... in order"));
        }
        let size = c["size"]
            .as_u64()
            .ok_or_else(|| schema_error("size must be a non-negative integer"))?;
        let stats = object(&c["stats"], "stats")?;
        let density = object(&c["density"], "density")?;
        keys_match(stats, &features, "stats")?;
        keys_match(density, &features, "density")?;
        for f in &features {
            match &stats[*f] {
                Value::Null if size == 0 => {}
                s => {
                    let s = object(s, "summary")?;
                    if s.len() != 5 {
                        return Err(schema_error("summary needs exactly min,q1,median,q3,max"));
                    }
                    let chain = ["min", "q1", "median", "q3", "max"]
                        .iter()
                        .map(|k| s.get(*k).map_or(Err(schema_error(format!("missing {k}"))), |v| number(v, k)))
                        .collect::<Result<Vec<_>>>()?;
                    if chain.windows(2).any(|w| w[0] > w[1]) {
                        return Err(schema_error(format!("summary of {f} is not ordered")));
                    }
                }
            }
            let curve = density[*f]
                .as_array()
                .ok_or_else(|| schema_error("density must be an array"))?;
            if size > 0 && curve.len() < 16 {
                return Err(schema_error("density needs at least 16 points"));
            }
            for point in curve {
                let pair = point.as_array().filter(|p| p.len() == 2).ok_or_else(|| schema_error("density points are [pos, val]"))?;
                let (x, y) = (number(&pair[0], "pos")?, number(&pair[1], "val")?);
                if !(0.0..=1.0).contains(&x) || y < 0.0 {
                    return Err(schema_error("density position outside [0,1] or negative value"));
                }
            }
        }
    }
    Ok(())
}
