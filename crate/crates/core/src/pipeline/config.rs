use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cluster::KMeansOptions;
use crate::embed::EmbedOptions;
use crate::error::{Error, Result};
use crate::features::ScoreFormula;
use crate::ingest::{PlantedPartition, STATIC_FEATURES, TEMPORAL_FEATURES};
use crate::metrics::PageRankOptions;

/// Which cluster file a downstream stage reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterSource {
    /// Static clusters when present, temporal otherwise.
    #[default]
    Auto,
    Static,
    Temporal,
    Embedding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionSource {
    #[default]
    Temporal,
    Static,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    pub formula: ScoreFormula,
    /// Columns to rank; empty means the temporal features.
    pub features: Vec<String>,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            formula: ScoreFormula::Table,
            features: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub k_temporal: usize,
    pub k_static: usize,
    pub k_embedding: usize,
    /// Min-max scale every feature over all players (and time points) first.
    pub normalize: bool,
    pub max_iter: usize,
    pub tol: f64,
    pub n_init: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        let km = KMeansOptions::default();
        Self {
            k_temporal: 3,
            k_static: 5,
            k_embedding: 3,
            normalize: true,
            max_iter: km.max_iter,
            tol: km.tol,
            n_init: km.n_init,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub clusters: ClusterSource,
    /// Attribute holding online duration, read at the last time point.
    pub duration_feature: String,
    pub bin_unit: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            clusters: ClusterSource::Auto,
            duration_feature: "online_time".into(),
            bin_unit: 1000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KolConfig {
    pub top_k: usize,
    /// One edge list per snapshot; empty means the main edge list only.
    pub snapshots: Vec<PathBuf>,
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub weighted: bool,
}

impl Default for KolConfig {
    fn default() -> Self {
        let pr = PageRankOptions::default();
        Self {
            top_k: 10,
            snapshots: Vec::new(),
            damping: pr.damping,
            tol: pr.tol,
            max_iter: pr.max_iter,
            weighted: pr.weighted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectConfig {
    pub method: crate::dimred::ProjectionMethod,
    pub source: ProjectionSource,
    pub clusters: ClusterSource,
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        Self {
            method: crate::dimred::ProjectionMethod::Pca,
            source: ProjectionSource::Temporal,
            clusters: ClusterSource::Temporal,
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_players: usize,
    pub n_timepoints: usize,
    pub n_clusters: usize,
    pub separation: f64,
    pub graph: PlantedPartition,
    pub start_date: chrono::NaiveDate,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let spec = crate::ingest::SyntheticSpec::default();
        Self {
            n_players: spec.n_players,
            n_timepoints: spec.n_timepoints,
            n_clusters: spec.n_clusters,
            separation: spec.separation,
            graph: spec.graph,
            start_date: spec.start_date,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    pub host: String,
    pub port: u16,
    /// Directory of the built UI bundle.
    pub ui_dir: PathBuf,
    /// Directory of report JSONs; defaults to the output directory.
    pub reports_dir: Option<PathBuf>,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: 8080,
            ui_dir: PathBuf::from("ui/dist"),
            reports_dir: None,
        }
    }
}

/// Whole-pipeline configuration, stored as one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Snapshot CSV; defaults to `<out>/snapshots.csv`.
    pub snapshots: Option<PathBuf>,
    /// Edge list CSV; defaults to `<out>/edges.csv`.
    pub edges: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub temporal_features: Vec<String>,
    pub static_features: Vec<String>,
    pub score: ScoreConfig,
    pub cluster: ClusterConfig,
    pub embedding: EmbedOptions,
    pub metrics: MetricsConfig,
    pub kol: KolConfig,
    pub project: ProjectConfig,
    pub report: ReportConfig,
    pub synth: SynthConfig,
    pub serve: ServeConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub clusters: ClusterSource,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            snapshots: None,
            edges: None,
            out: PathBuf::from("out"),
            seed: 0,
            temporal_features: TEMPORAL_FEATURES.iter().map(|s| s.to_string()).collect(),
            static_features: STATIC_FEATURES.iter().map(|s| s.to_string()).collect(),
            score: ScoreConfig::default(),
            cluster: ClusterConfig::default(),
            embedding: EmbedOptions::default(),
            metrics: MetricsConfig::default(),
            kol: KolConfig::default(),
            project: ProjectConfig::default(),
            report: ReportConfig::default(),
            synth: SynthConfig::default(),
            serve: ServeConfig::default(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::ConfigInvalid(msg.into())
}

/// Sets `path` (dot separated) inside a JSON object, creating objects on the way.
fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(invalid(format!("bad override key {path:?}")));
    }
    for part in &parts[..parts.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| invalid(format!("override {path:?} descends into a non-object")))?;
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
    }
    node.as_object_mut()
        .ok_or_else(|| invalid(format!("override {path:?} descends into a non-object")))?
        .insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl PipelineConfig {
    /// Reads an optional config file and applies `key=value` overrides. Values
    /// are parsed as JSON where possible, otherwise taken as strings.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut value = serde_json::to_value(Self::default())?;
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
            let file: Value = serde_json::from_str(&text)
                .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            let obj = file
                .as_object()
                .ok_or_else(|| invalid("config must be a JSON object"))?;
            merge(&mut value, obj);
        }
        for (key, raw) in overrides {
            let v = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.clone()));
            set_path(&mut value, key, v)?;
        }
        let config: Self = serde_json::from_value(value).map_err(|e| invalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let ks = [
            ("cluster.k_temporal", self.cluster.k_temporal),
            ("cluster.k_static", self.cluster.k_static),
            ("cluster.k_embedding", self.cluster.k_embedding),
            ("kol.top_k", self.kol.top_k),
        ];
        if let Some((name, _)) = ks.iter().find(|(_, k)| *k == 0) {
            return Err(invalid(format!("{name} must be >= 1")));
        }
        if self.temporal_features.is_empty() || self.static_features.is_empty() {
            return Err(invalid("feature lists must be nonempty"));
        }
        Ok(())
    }

    pub fn snapshots_path(&self) -> PathBuf {
        self.snapshots.clone().unwrap_or_else(|| self.out.join("snapshots.csv"))
    }

    pub fn edges_path(&self) -> PathBuf {
        self.edges.clone().unwrap_or_else(|| self.out.join("edges.csv"))
    }

    pub fn kmeans_options(&self) -> KMeansOptions {
        KMeansOptions {
            max_iter: self.cluster.max_iter,
            tol: self.cluster.tol,
            n_init: self.cluster.n_init,
            seed: self.seed,
            ..Default::default()
        }
    }
}

/// Recursive object merge; non-object values replace.
fn merge(base: &mut Value, patch: &serde_json::Map<String, Value>) {
    for (k, v) in patch {
        match (base.get_mut(k), v) {
            (Some(b @ Value::Object(_)), Value::Object(p)) => merge(b, p),
            _ => {
                base.as_object_mut().expect("merge target is an object").insert(k.clone(), v.clone());
            }
        }
    }
}
