use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use nalgebra::DMatrix;
use serde::Serialize;

use super::config::{ClusterSource, PipelineConfig, ProjectionSource};
use crate::cluster::{kmeans, ts_kmeans, ClusterModelFile};
use crate::dimred::{pca_fit, pca_project, tsne, ProjectionMethod, TsneOptions};
use crate::embed::{embed_and_cluster, EmbedOptions};
use crate::error::{Error, Result};
use crate::features::{rank_features, write_scores_csv};
use crate::ingest::{
    assemble_tensor, derive_mode_choice_ratio, generate_synthetic, parse_edge_list, parse_snapshots,
    write_edge_list, PlayerSnapshot, SocialGraph, SyntheticSpec, TimeSeriesTensor, FUNNY_MODE_GAMES,
    TOTAL_GAMES,
};
use crate::metrics::{
    cluster_subgraph_stats, duration_histogram, persistent_kols, write_histogram_csv, write_metrics_csv,
    PageRankOptions,
};
use crate::report::{build_report, validate_report_json, Normalization};

pub const SCORES_FILE: &str = "scores.csv";
pub const TEMPORAL_CLUSTERS_FILE: &str = "temporal_clusters.json";
pub const STATIC_CLUSTERS_FILE: &str = "static_clusters.json";
pub const EMBEDDING_CLUSTERS_FILE: &str = "embedding_clusters.json";
pub const EMBEDDINGS_FILE: &str = "embeddings.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const HISTOGRAM_FILE: &str = "duration_histogram.csv";
pub const KOL_FILE: &str = "kol.json";
pub const PROJECTION_FILE: &str = "projection.csv";
pub const REPORT_FILE: &str = "report.json";
pub const TENSOR_FILE: &str = "tensor.json";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";

/// Batch subcommands; `serve` is handled separately because it blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Ingest,
    ScoreFeatures,
    ClusterTemporal,
    ClusterStatic,
    EmbedGraph,
    GraphMetrics,
    Kol,
    Project,
    Report,
    Synth,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::ScoreFeatures => "score-features",
            Command::ClusterTemporal => "cluster-temporal",
            Command::ClusterStatic => "cluster-static",
            Command::EmbedGraph => "embed-graph",
            Command::GraphMetrics => "graph-metrics",
            Command::Kol => "kol",
            Command::Project => "project",
            Command::Report => "report",
            Command::Synth => "synth",
        }
    }
}

/// What a subcommand produced; also written as `<out>/logs/<command>.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunLog {
    pub command: String,
    /// Effective seed of every stochastic stage, in execution order.
    pub stages: Vec<StageSeed>,
    /// Artifact file names relative to the output directory.
    pub artifacts: Vec<String>,
    /// Human-readable summary lines.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub summary: Vec<String>,
    pub config: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageSeed {
    pub stage: String,
    pub seed: u64,
}

struct Run<'a> {
    config: &'a PipelineConfig,
    log: RunLog,
}

impl<'a> Run<'a> {
    fn seed(&mut self, stage: &str) -> u64 {
        let seed = self.config.seed;
        log::info!("stage={stage} seed={seed}");
        self.log.stages.push(StageSeed {
            stage: stage.to_string(),
            seed,
        });
        seed
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.config.out.join(name), bytes)?;
        self.log.artifacts.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

fn dedup(lists: &[&[String]]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for name in lists.iter().flat_map(|l| l.iter()) {
        if !out.contains(name) {
            out.push(name.clone());
        }
    }
    out
}

/// Reads the snapshot table with every configured feature. A missing
/// `mode_choice_ratio` column is derived from the raw game counters.
fn load_snapshots(config: &PipelineConfig, extra: &[String]) -> Result<Vec<PlayerSnapshot>> {
    let path = config.snapshots_path();
    let text = fs::read_to_string(&path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?;
    let header: Vec<String> = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
        .headers()?
        .iter()
        .map(str::to_string)
        .collect();
    let has = |name: &str| header.iter().any(|h| h == name);
    let wanted = dedup(&[&config.temporal_features, &config.static_features, extra]);
    let derive = !has("mode_choice_ratio") && has(FUNNY_MODE_GAMES) && has(TOTAL_GAMES);
    let mut schema: Vec<&str> = wanted
        .iter()
        .map(String::as_str)
        .filter(|n| !(derive && *n == "mode_choice_ratio"))
        .collect();
    if derive {
        schema.extend([FUNNY_MODE_GAMES, TOTAL_GAMES]);
    }
    let mut snaps = parse_snapshots(text.as_bytes(), &schema)?;
    if derive {
        let filled = derive_mode_choice_ratio(&mut snaps)?;
        log::info!("derived mode_choice_ratio for {filled} snapshots");
    }
    let violations: usize = snaps.iter().map(|s| s.violations().len()).sum();
    if violations > 0 {
        log::warn!("{violations} attribute range violations in {}", path.display());
    }
    Ok(snaps)
}

fn tensor_of(snaps: &[PlayerSnapshot], features: &[String]) -> Result<TimeSeriesTensor> {
    let names: Vec<&str> = features.iter().map(String::as_str).collect();
    assemble_tensor(snaps, &names)
}

/// Min-max scales every feature over all players and time points.
fn normalize_tensor(t: &TimeSeriesTensor) -> Result<TimeSeriesTensor> {
    let d = t.n_features();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for (i, v) in t.values().iter().enumerate() {
        lo[i % d] = lo[i % d].min(*v);
        hi[i % d] = hi[i % d].max(*v);
    }
    let values = t
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| Normalization { min: lo[i % d], max: hi[i % d] }.apply(*v))
        .collect();
    TimeSeriesTensor::new(
        t.player_ids().to_vec(),
        t.time_points().to_vec(),
        t.feature_names().to_vec(),
        values,
    )
}

fn normalize_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let n = Normalization { min: col.min(), max: col.max() };
        col.apply(|v| *v = n.apply(*v));
    }
    out
}

/// Each player's whole series as one row.
fn series_matrix(t: &TimeSeriesTensor) -> DMatrix<f64> {
    let width = t.n_times() * t.n_features();
    DMatrix::from_row_slice(t.n_players(), width, t.values())
}

/// Static features at the last time point.
fn static_matrix(config: &PipelineConfig, snaps: &[PlayerSnapshot]) -> Result<(Vec<String>, DMatrix<f64>)> {
    let t = tensor_of(snaps, &config.static_features)?;
    Ok((t.player_ids().to_vec(), t.slice_at(t.n_times() - 1)))
}

fn load_graph(path: &Path) -> Result<SocialGraph> {
    let parsed = parse_edge_list(open(path)?)?;
    Ok(parsed.graph)
}

fn cluster_file_for(config: &PipelineConfig, source: ClusterSource) -> Result<PathBuf> {
    let out = &config.out;
    let path = match source {
        ClusterSource::Static => out.join(STATIC_CLUSTERS_FILE),
        ClusterSource::Temporal => out.join(TEMPORAL_CLUSTERS_FILE),
        ClusterSource::Embedding => out.join(EMBEDDING_CLUSTERS_FILE),
        ClusterSource::Auto => {
            let s = out.join(STATIC_CLUSTERS_FILE);
            if s.exists() {
                s
            } else {
                out.join(TEMPORAL_CLUSTERS_FILE)
            }
        }
    };
    if !path.exists() {
        return Err(Error::InvalidArgument(format!(
            "cluster file {} not found; run a clustering subcommand first",
            path.display()
        )));
    }
    Ok(path)
}

pub fn read_cluster_file(path: &Path) -> Result<ClusterModelFile> {
    Ok(serde_json::from_reader(std::io::BufReader::new(open(path)?))?)
}

/// Runs one batch subcommand and writes its artifacts plus a run log.
pub fn run(command: Command, config: &PipelineConfig) -> Result<RunLog> {
    let mut run = Run {
        config,
        log: RunLog {
            command: command.name().to_string(),
            stages: Vec::new(),
            artifacts: Vec::new(),
            summary: Vec::new(),
            config: config.clone(),
        },
    };
    match command {
        Command::Synth => synth(&mut run)?,
        Command::Ingest => ingest(&mut run)?,
        Command::ScoreFeatures => score_features(&mut run)?,
        Command::ClusterTemporal => cluster_temporal(&mut run)?,
        Command::ClusterStatic => cluster_static(&mut run)?,
        Command::EmbedGraph => embed_graph(&mut run)?,
        Command::GraphMetrics => graph_metrics(&mut run)?,
        Command::Kol => kol(&mut run)?,
        Command::Project => project(&mut run)?,
        Command::Report => report(&mut run)?,
    }
    let log = run.log.clone();
    let mut bytes = serde_json::to_vec_pretty(&log)?;
    bytes.push(b'\n');
    write_atomic(&config.out.join("logs").join(format!("{}.json", command.name())), &bytes)?;
    Ok(log)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn round_to(v: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (v * s).round() / s
}

/// Synthetic snapshots and edges with planted clusters. Raw generator
/// values are mapped into each attribute's domain: win/mode rates through
/// a logistic, flags by sign, everything else shifted to start at 0 and
/// scaled by 100.
fn synth(run: &mut Run) -> Result<()> {
    let c = run.config;
    let features = dedup(&[&c.temporal_features, &c.static_features]);
    let spec = SyntheticSpec {
        n_players: c.synth.n_players,
        n_timepoints: c.synth.n_timepoints,
        n_features: features.len(),
        n_clusters: c.synth.n_clusters,
        separation: c.synth.separation,
        graph: c.synth.graph.clone(),
        seed: run.seed("synth"),
        feature_names: features.clone(),
        start_date: c.synth.start_date,
    };
    let data = generate_synthetic(&spec)?;
    let t = &data.tensor;
    let d = t.n_features();
    let scale = c.synth.separation.max(1.0);
    let mut lo = vec![f64::INFINITY; d];
    for (i, v) in t.values().iter().enumerate() {
        lo[i % d] = lo[i % d].min(*v);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["player_id".to_string(), "time_point".to_string()];
    header.extend(features.iter().cloned());
    w.write_record(&header)?;
    for (p, id) in t.player_ids().iter().enumerate() {
        for (ti, date) in t.time_points().iter().enumerate() {
            let mut rec = vec![id.clone(), date.format("%Y-%m-%d").to_string()];
            for (f, name) in features.iter().enumerate() {
                let x = t.get(p, ti, f);
                let v = if crate::ingest::snapshot::UNIT_INTERVAL.contains(&name.as_str()) {
                    round_to(sigmoid(x / scale), 6)
                } else if crate::ingest::snapshot::BINARY.contains(&name.as_str()) {
                    if x > 0.0 { 1.0 } else { 0.0 }
                } else {
                    round_to((x - lo[f]) * 100.0, 2)
                };
                rec.push(v.to_string());
            }
            w.write_record(&rec)?;
        }
    }
    let snapshots = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let mut edges = Vec::new();
    write_edge_list(&data.graph, &mut edges)?;
    let ids = t.player_ids();
    let truth = serde_json::json!({
        "labels": ids.iter().cloned().zip(data.labels.iter().copied()).collect::<IndexMap<_, _>>(),
        "communities": ids.iter().cloned().zip(data.communities.iter().copied()).collect::<IndexMap<_, _>>(),
    });
    let snap_path = c.snapshots_path();
    let edge_path = c.edges_path();
    write_atomic(&snap_path, &snapshots)?;
    write_atomic(&edge_path, &edges)?;
    for p in [snap_path, edge_path] {
        let rel = p.strip_prefix(&c.out).map(Path::to_path_buf).unwrap_or(p);
        run.log.artifacts.push(rel.display().to_string());
    }
    run.write_json(GROUND_TRUTH_FILE, &truth)
}

fn ingest(run: &mut Run) -> Result<()> {
    let c = run.config;
    let snaps = load_snapshots(c, &[])?;
    let tensor = tensor_of(&snaps, &c.temporal_features)?;
    let graph = c.edges_path();
    let graph_summary = if graph.exists() {
        let g = parse_edge_list(open(&graph)?)?;
        format!(
            " nodes={} edges={} self_loops_dropped={}",
            g.graph.node_count(),
            g.graph.edge_count(),
            g.self_loops_dropped
        )
    } else {
        String::new()
    };
    run.log.summary.push(format!(
        "players={} time_points={} features={} snapshots={}{graph_summary}",
        tensor.n_players(),
        tensor.n_times(),
        tensor.n_features(),
        snaps.len()
    ));
    run.write_json(TENSOR_FILE, &tensor)
}

fn score_features(run: &mut Run) -> Result<()> {
    let c = run.config;
    let features = if c.score.features.is_empty() {
        c.temporal_features.clone()
    } else {
        c.score.features.clone()
    };
    let snaps = load_snapshots(c, &features)?;
    let tensor = tensor_of(&snaps, &features)?;
    let pooled = tensor.pooled();
    let (keep, constant): (Vec<usize>, Vec<usize>) =
        (0..features.len()).partition(|&j| pooled.column(j).max() > pooled.column(j).min());
    if !constant.is_empty() {
        let names: Vec<&str> = constant.iter().map(|&j| features[j].as_str()).collect();
        log::warn!("dropping constant features from scoring: {}", names.join(", "));
    }
    let names: Vec<String> = keep.iter().map(|&j| features[j].clone()).collect();
    let scores = rank_features(&pooled.select_columns(&keep), &names, c.score.formula)?;
    let mut out = Vec::new();
    write_scores_csv(&scores, &mut out)?;
    run.write(SCORES_FILE, &out)
}

fn cluster_temporal(run: &mut Run) -> Result<()> {
    let c = run.config;
    let snaps = load_snapshots(c, &[])?;
    let mut tensor = tensor_of(&snaps, &c.temporal_features)?;
    if c.cluster.normalize {
        tensor = normalize_tensor(&tensor)?;
    }
    let mut opts = c.kmeans_options();
    opts.seed = run.seed("ts_kmeans");
    let model = ts_kmeans(&tensor, c.cluster.k_temporal, &opts)?;
    run.write_json(TEMPORAL_CLUSTERS_FILE, &ClusterModelFile::from_model(&model, tensor.player_ids())?)
}

fn cluster_static(run: &mut Run) -> Result<()> {
    let c = run.config;
    let snaps = load_snapshots(c, &[])?;
    let (ids, mut m) = static_matrix(c, &snaps)?;
    if c.cluster.normalize {
        m = normalize_columns(&m);
    }
    let mut opts = c.kmeans_options();
    opts.seed = run.seed("kmeans");
    let model = kmeans(&m, c.cluster.k_static, &opts)?;
    run.write_json(STATIC_CLUSTERS_FILE, &ClusterModelFile::from_model(&model, &ids)?)
}

fn embed_graph(run: &mut Run) -> Result<()> {
    let c = run.config;
    let graph = load_graph(&c.edges_path())?;
    let opts = EmbedOptions {
        seed: run.seed("embedding"),
        ..c.embedding.clone()
    };
    let mut km = c.kmeans_options();
    km.seed = run.seed("kmeans");
    let (embedding, model) = embed_and_cluster(&graph, c.cluster.k_embedding, &opts, &km)?;
    run.write_json(EMBEDDINGS_FILE, &embedding)?;
    run.write_json(EMBEDDING_CLUSTERS_FILE, &ClusterModelFile::from_model(&model, graph.node_ids())?)
}

fn graph_metrics(run: &mut Run) -> Result<()> {
    let c = run.config;
    let graph = load_graph(&c.edges_path())?;
    let clusters = read_cluster_file(&cluster_file_for(c, c.metrics.clusters)?)?;
    let mut assignments = BTreeMap::new();
    let mut skipped = 0;
    for (id, &k) in &clusters.assignments {
        if graph.index_of(id).is_some() {
            assignments.insert(id.clone(), k);
        } else {
            skipped += 1;
        }
    }
    if skipped > 0 {
        log::warn!("{skipped} clustered players are not in the social graph");
    }
    let rows = cluster_subgraph_stats(&graph, &assignments)?;
    let mut out = Vec::new();
    write_metrics_csv(&rows, &mut out)?;
    run.write(METRICS_FILE, &out)?;

    if c.snapshots_path().exists() {
        let feature = vec![c.metrics.duration_feature.clone()];
        let snaps = load_snapshots(c, &feature)?;
        let t = tensor_of(&snaps, &feature)?;
        let last = t.slice_at(t.n_times() - 1);
        let durations: BTreeMap<String, f64> = t
            .player_ids()
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), last[(i, 0)]))
            .collect();
        let all: BTreeMap<String, usize> = clusters.assignments.iter().map(|(k, v)| (k.clone(), *v)).collect();
        let hist = duration_histogram(&durations, &all, c.metrics.bin_unit)?;
        let mut out = Vec::new();
        write_histogram_csv(&hist, &mut out)?;
        run.write(HISTOGRAM_FILE, &out)?;
    } else {
        log::warn!("no snapshot table; skipping the duration histogram");
    }
    Ok(())
}

#[derive(Serialize)]
struct KolFile {
    top_k: usize,
    snapshots: Vec<String>,
    per_snapshot_topk: Vec<Vec<String>>,
    persistent: Vec<String>,
}

fn kol(run: &mut Run) -> Result<()> {
    let c = run.config;
    let paths = if c.kol.snapshots.is_empty() {
        vec![c.edges_path()]
    } else {
        c.kol.snapshots.clone()
    };
    let graphs = paths.iter().map(|p| load_graph(p)).collect::<Result<Vec<_>>>()?;
    let opts = PageRankOptions {
        damping: c.kol.damping,
        tol: c.kol.tol,
        max_iter: c.kol.max_iter,
        weighted: c.kol.weighted,
    };
    let report = persistent_kols(&graphs, c.kol.top_k, &opts)?;
    run.write_json(
        KOL_FILE,
        &KolFile {
            top_k: c.kol.top_k,
            snapshots: paths.iter().map(|p| p.display().to_string()).collect(),
            per_snapshot_topk: report.per_snapshot_topk,
            persistent: report.persistent,
        },
    )
}

fn project(run: &mut Run) -> Result<()> {
    let c = run.config;
    let snaps = load_snapshots(c, &[])?;
    let (ids, m) = match c.project.source {
        ProjectionSource::Temporal => {
            let t = normalize_tensor(&tensor_of(&snaps, &c.temporal_features)?)?;
            (t.player_ids().to_vec(), series_matrix(&t))
        }
        ProjectionSource::Static => {
            let (ids, m) = static_matrix(c, &snaps)?;
            (ids, normalize_columns(&m))
        }
    };
    let projection = match c.project.method {
        ProjectionMethod::Pca => pca_project(&pca_fit(&m, 2)?, &m, &ids)?,
        ProjectionMethod::Tsne => {
            let opts = TsneOptions {
                perplexity: c.project.perplexity,
                iters: c.project.iterations,
                learning_rate: c.project.learning_rate,
                seed: run.seed("tsne"),
                ..Default::default()
            };
            tsne(&m, &ids, &opts)?.projection
        }
    };
    let clusters = match cluster_file_for(c, c.project.clusters) {
        Ok(path) => Some(read_cluster_file(&path)?),
        Err(_) => None,
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "x", "y", "cluster"])?;
    for (id, xy) in projection.ids.iter().zip(&projection.coords) {
        let cluster = clusters
            .as_ref()
            .and_then(|f| f.assignments.get(id))
            .map_or_else(String::new, |k| k.to_string());
        w.write_record([id.clone(), xy[0].to_string(), xy[1].to_string(), cluster])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    run.write(PROJECTION_FILE, &bytes)
}

fn report(run: &mut Run) -> Result<()> {
    let c = run.config;
    let clusters = read_cluster_file(&cluster_file_for(c, c.report.clusters)?)?;
    let snaps = load_snapshots(c, &[])?;
    let (ids, m) = static_matrix(c, &snaps)?;
    let assignments = ids
        .iter()
        .map(|id| {
            clusters
                .assignments
                .get(id)
                .copied()
                .ok_or_else(|| Error::DimensionMismatch(format!("player {id} has no cluster assignment")))
        })
        .collect::<Result<Vec<_>>>()?;
    let report = build_report(&m, &c.static_features, &assignments, clusters.k)?;
    validate_report_json(&serde_json::to_value(&report)?)?;
    run.write_json(REPORT_FILE, &report)
}
