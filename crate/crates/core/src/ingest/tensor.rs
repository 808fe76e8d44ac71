use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::PlayerSnapshot;
use crate::error::{Error, Result};

/// Players × time points × features, stored row-major in that order.
///
/// Cells absent from the source snapshots hold zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesTensor {
    player_ids: Vec<String>,
    time_points: Vec<NaiveDate>,
    feature_names: Vec<String>,
    values: Vec<f64>,
}

impl TimeSeriesTensor {
    pub fn new(
        player_ids: Vec<String>,
        time_points: Vec<NaiveDate>,
        feature_names: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let expected = player_ids.len() * time_points.len() * feature_names.len();
        if values.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "tensor expects {expected} values, got {}",
                values.len()
            )));
        }
        if time_points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "time points must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            player_ids,
            time_points,
            feature_names,
            values,
        })
    }

    pub fn n_players(&self) -> usize {
        self.player_ids.len()
    }

    pub fn n_times(&self) -> usize {
        self.time_points.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn player_ids(&self) -> &[String] {
        &self.player_ids
    }

    pub fn time_points(&self) -> &[NaiveDate] {
        &self.time_points
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Flat row-major values (player, time, feature).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, player: usize, time: usize, feature: usize) -> f64 {
        self.values[self.offset(player, time, feature)]
    }

    fn offset(&self, player: usize, time: usize, feature: usize) -> usize {
        (player * self.n_times() + time) * self.n_features() + feature
    }

    /// One player's full series, flattened over (time, feature).
    pub fn series(&self, player: usize) -> &[f64] {
        let len = self.n_times() * self.n_features();
        &self.values[player * len..(player + 1) * len]
    }

    /// The N×d cross-section at one time index.
    pub fn slice_at(&self, time: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_players(), self.n_features(), |i, f| {
            self.get(i, time, f)
        })
    }

    /// Every (player, time) pair as a row: (N·T)×d.
    pub fn pooled(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(
            self.n_players() * self.n_times(),
            self.n_features(),
            &self.values,
        )
    }

    /// Restricts the tensor to the named features, in the given order.
    pub fn select_features(&self, names: &[&str]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| {
                self.feature_names
                    .iter()
                    .position(|f| f == n)
                    .ok_or_else(|| Error::MissingColumn(n.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut values = Vec::with_capacity(self.n_players() * self.n_times() * idx.len());
        for p in 0..self.n_players() {
            for t in 0..self.n_times() {
                values.extend(idx.iter().map(|&f| self.get(p, t, f)));
            }
        }
        Self::new(
            self.player_ids.clone(),
            self.time_points.clone(),
            names.iter().map(|s| s.to_string()).collect(),
            values,
        )
    }

    /// All nonzero cells as (player, time, feature, value).
    pub fn nonzero_cells(&self) -> Vec<(String, NaiveDate, String, f64)> {
        let mut out = Vec::new();
        for (p, pid) in self.player_ids.iter().enumerate() {
            for (t, tp) in self.time_points.iter().enumerate() {
                for (f, name) in self.feature_names.iter().enumerate() {
                    let v = self.get(p, t, f);
                    if v != 0.0 {
                        out.push((pid.clone(), *tp, name.clone(), v));
                    }
                }
            }
        }
        out
    }
}

/// Pivots snapshots into a tensor. Players keep first-appearance order,
/// time points are sorted, and absent cells are zero.
pub fn assemble_tensor(snapshots: &[PlayerSnapshot], features: &[&str]) -> Result<TimeSeriesTensor> {
    if snapshots.is_empty() || features.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut player_index: HashMap<&str, usize> = HashMap::new();
    let mut player_ids = Vec::new();
    for s in snapshots {
        player_index.entry(&s.player_id).or_insert_with(|| {
            player_ids.push(s.player_id.clone());
            player_ids.len() - 1
        });
    }
    let times: BTreeMap<NaiveDate, usize> = snapshots
        .iter()
        .map(|s| (s.time_point, 0))
        .collect::<BTreeMap<_, _>>()
        .into_keys()
        .enumerate()
        .map(|(i, t)| (t, i))
        .collect();
    let (n, t, d) = (player_ids.len(), times.len(), features.len());
    let mut values = vec![0.0; n * t * d];
    let mut seen = vec![false; n * t * d];
    for s in snapshots {
        let p = player_index[s.player_id.as_str()];
        let ti = times[&s.time_point];
        for (f, name) in features.iter().enumerate() {
            let Some(v) = s.get(name) else { continue };
            let off = (p * t + ti) * d + f;
            if seen[off] && values[off] != v {
                return Err(Error::DuplicateCell {
                    player: s.player_id.clone(),
                    time: s.time_point.to_string(),
                    feature: name.to_string(),
                });
            }
            seen[off] = true;
            values[off] = v;
        }
    }
    TimeSeriesTensor::new(
        player_ids,
        times.into_keys().collect(),
        features.iter().map(|s| s.to_string()).collect(),
        values,
    )
}

#[derive(Serialize, Deserialize)]
struct TensorJson {
    player_ids: Vec<String>,
    time_points: Vec<NaiveDate>,
    feature_names: Vec<String>,
    values: Vec<Vec<Vec<f64>>>,
}

impl Serialize for TimeSeriesTensor {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let values = (0..self.n_players())
            .map(|p| {
                (0..self.n_times())
                    .map(|t| (0..self.n_features()).map(|f| self.get(p, t, f)).collect())
                    .collect()
            })
            .collect();
        TensorJson {
            player_ids: self.player_ids.clone(),
            time_points: self.time_points.clone(),
            feature_names: self.feature_names.clone(),
            values,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TimeSeriesTensor {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = TensorJson::deserialize(deserializer)?;
        let (t, d) = (raw.time_points.len(), raw.feature_names.len());
        let mut flat = Vec::new();
        for row in &raw.values {
            if row.len() != t || row.iter().any(|cell| cell.len() != d) {
                return Err(D::Error::custom("ragged tensor values"));
            }
            flat.extend(row.iter().flatten().copied());
        }
        TimeSeriesTensor::new(raw.player_ids, raw.time_points, raw.feature_names, flat)
            .map_err(D::Error::custom)
    }
}
