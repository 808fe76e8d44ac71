use std::collections::BTreeMap;
use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The ten attributes retained for temporal clustering, in ranking order.
pub const TEMPORAL_FEATURES: [&str; 10] = [
    "carteam_leader_num",
    "chicken_rate",
    "diamond_add_1week",
    "mode_choice_ratio",
    "is_comeback",
    "avg_damage",
    "recruit_num",
    "is_register",
    "friend_num_plat",
    "avg_healtimes",
];

/// Static profile attributes used for the radar-violin report.
pub const STATIC_FEATURES: [&str; 6] = [
    "segment",
    "level",
    "online_time",
    "avg_survival_time",
    "intimate_friend_num",
    "diamond_add_1week",
];

pub const FUNNY_MODE_GAMES: &str = "funny_mode_games";
pub const TOTAL_GAMES: &str = "total_games";

pub(crate) const UNIT_INTERVAL: [&str; 2] = ["chicken_rate", "mode_choice_ratio"];
pub(crate) const BINARY: [&str; 2] = ["is_comeback", "is_register"];
const COUNTERS: [&str; 5] = [
    "carteam_leader_num",
    "recruit_num",
    "friend_num_plat",
    FUNNY_MODE_GAMES,
    TOTAL_GAMES,
];

/// One player's attribute record at one time point.
///
/// Attributes that were absent or failed to parse are simply not present
/// in `attributes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerSnapshot {
    pub player_id: String,
    pub time_point: NaiveDate,
    pub attributes: BTreeMap<String, f64>,
}

impl PlayerSnapshot {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.attributes.get(name).copied()
    }

    /// Checks the domain ranges of the recognized attributes. Returns one
    /// message per violated constraint.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.player_id.is_empty() {
            out.push("empty player_id".to_string());
        }
        for name in UNIT_INTERVAL {
            if let Some(v) = self.get(name) {
                if !(0.0..=1.0).contains(&v) {
                    out.push(format!("{name}={v} outside [0,1]"));
                }
            }
        }
        for name in BINARY {
            if let Some(v) = self.get(name) {
                if v != 0.0 && v != 1.0 {
                    out.push(format!("{name}={v} not in {{0,1}}"));
                }
            }
        }
        for name in COUNTERS {
            if let Some(v) = self.get(name) {
                if v < 0.0 {
                    out.push(format!("{name}={v} negative"));
                }
            }
        }
        out
    }
}

/// Parses a snapshot table. The header must contain `player_id`,
/// `time_point` and every column in `schema`; other columns are ignored.
pub fn parse_snapshots<R: Read>(reader: R, schema: &[&str]) -> Result<Vec<PlayerSnapshot>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let id_col = column("player_id")?;
    let time_col = column("time_point")?;
    let attr_cols = schema
        .iter()
        .map(|name| column(name).map(|i| (name.to_string(), i)))
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::new();
    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                return Err(match e.kind() {
                    csv::ErrorKind::UnequalLengths { .. } => Error::MalformedRow(line),
                    _ => Error::Csv(e),
                });
            }
        };
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let raw_time = &record[time_col];
        let time_point = NaiveDate::parse_from_str(raw_time, "%Y-%m-%d").map_err(|_| {
            Error::InvalidTimePoint {
                line,
                value: raw_time.to_string(),
            }
        })?;
        let attributes = attr_cols
            .iter()
            .filter_map(|(name, i)| {
                record[*i]
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(|v| (name.clone(), v))
            })
            .collect();
        out.push(PlayerSnapshot {
            player_id: record[id_col].to_string(),
            time_point,
            attributes,
        });
    }
    Ok(out)
}

/// Share of games played in the funny mode; zero when no games were played.
pub fn mode_choice_ratio(funny_mode_games: i64, total_games: i64) -> Result<f64> {
    if funny_mode_games < 0 || total_games < 0 || funny_mode_games > total_games {
        return Err(Error::InvalidCounts {
            funny: funny_mode_games,
            total: total_games,
        });
    }
    if total_games == 0 {
        return Ok(0.0);
    }
    Ok(funny_mode_games as f64 / total_games as f64)
}

/// Fills `mode_choice_ratio` from the raw game counters wherever the counters
/// are present and the ratio is not. Returns how many snapshots were filled.
pub fn derive_mode_choice_ratio(snapshots: &mut [PlayerSnapshot]) -> Result<usize> {
    let mut filled = 0;
    for snap in snapshots.iter_mut() {
        if snap.attributes.contains_key("mode_choice_ratio") {
            continue;
        }
        let (Some(funny), Some(total)) = (snap.get(FUNNY_MODE_GAMES), snap.get(TOTAL_GAMES)) else {
            continue;
        };
        if funny.fract() != 0.0 || total.fract() != 0.0 {
            return Err(Error::InvalidCounts {
                funny: funny as i64,
                total: total as i64,
            });
        }
        let ratio = mode_choice_ratio(funny as i64, total as i64)?;
        snap.attributes.insert("mode_choice_ratio".to_string(), ratio);
        filled += 1;
    }
    Ok(filled)
}
