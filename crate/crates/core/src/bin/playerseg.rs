use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use playerseg::pipeline::{self, Command, PipelineConfig};
use playerseg::Error;

/// Player behavior segmentation pipeline.
///
/// Any config key can be overridden with `--key=value` (dotted for nested
/// keys, e.g. `--cluster.k_static=4`). Values are read as JSON when they
/// parse, otherwise as strings.
#[derive(Parser, Debug)]
#[command(name = "playerseg", version)]
struct Cli {
    /// JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every stochastic stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Sub {
    /// Parse snapshots into a tensor and print a summary.
    Ingest,
    /// Rank temporal features by the composite score.
    ScoreFeatures,
    /// Time-series k-means over the temporal features.
    ClusterTemporal,
    /// K-means over the static features at the last time point.
    ClusterStatic,
    /// DeepWalk or LINE embedding followed by k-means.
    EmbedGraph,
    /// Per-cluster network statistics and online-time histogram.
    GraphMetrics,
    /// PageRank influencers persistent across snapshots.
    Kol,
    /// 2-D PCA or t-SNE projection.
    Project,
    /// Per-cluster feature summaries and densities for the UI.
    Report,
    /// Generate synthetic snapshots and a social graph.
    Synth,
    /// Serve the UI bundle and the report directory.
    Serve,
}

impl Sub {
    fn command(self) -> Option<Command> {
        Some(match self {
            Sub::Ingest => Command::Ingest,
            Sub::ScoreFeatures => Command::ScoreFeatures,
            Sub::ClusterTemporal => Command::ClusterTemporal,
            Sub::ClusterStatic => Command::ClusterStatic,
            Sub::EmbedGraph => Command::EmbedGraph,
            Sub::GraphMetrics => Command::GraphMetrics,
            Sub::Kol => Command::Kol,
            Sub::Project => Command::Project,
            Sub::Report => Command::Report,
            Sub::Synth => Command::Synth,
            Sub::Serve => return None,
        })
    }

    /// Short flag names that stand for a config key in this subcommand.
    fn alias(self, key: &str) -> Option<&'static str> {
        Some(match (self, key) {
            (Sub::ClusterTemporal, "k") => "cluster.k_temporal",
            (Sub::ClusterStatic, "k") => "cluster.k_static",
            (Sub::EmbedGraph, "k") => "cluster.k_embedding",
            (Sub::EmbedGraph, "method") => "embedding.method",
            (Sub::EmbedGraph, "dim") => "embedding.dim",
            (Sub::Project, "method") => "project.method",
            (Sub::Project, "perplexity") => "project.perplexity",
            (Sub::Kol, "top_k") => "kol.top_k",
            (Sub::Report | Sub::GraphMetrics | Sub::Project, "clusters") => match self {
                Sub::Report => "report.clusters",
                Sub::GraphMetrics => "metrics.clusters",
                _ => "project.clusters",
            },
            (Sub::ScoreFeatures, "formula") => "score.formula",
            (Sub::Serve, "port") => "serve.port",
            (Sub::Serve, "host") => "serve.host",
            _ => return None,
        })
    }
}

const CLAP_FLAGS: [&str; 5] = ["config", "seed", "out", "help", "version"];

/// Separates `--key=value` config overrides from the arguments clap parses.
fn split_overrides(args: Vec<String>) -> (Vec<String>, Vec<(String, String)>) {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    for arg in args {
        if let Some((key, value)) = arg.strip_prefix("--").and_then(|a| a.split_once('=')) {
            if !CLAP_FLAGS.contains(&key) && !key.is_empty() {
                overrides.push((key.replace('-', "_"), value.to_string()));
                continue;
            }
        }
        rest.push(arg);
    }
    (rest, overrides)
}

fn fail(err: &Error) -> ExitCode {
    let msg = serde_json::to_string(&err.to_string()).unwrap_or_default();
    eprintln!("error kind={} msg={msg}", err.kind());
    ExitCode::from(match err {
        Error::ConfigInvalid(_) => 2,
        _ => 1,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (args, overrides) = split_overrides(std::env::args().collect());
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let overrides: Vec<(String, String)> = overrides
        .into_iter()
        .map(|(k, v)| (cli.command.alias(&k).map_or(k, str::to_string), v))
        .collect();
    let mut config = match PipelineConfig::load(cli.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out {
        config.out = out;
    }

    match cli.command.command() {
        Some(cmd) => match pipeline::run(cmd, &config) {
            Ok(log) => {
                for line in &log.summary {
                    println!("{line}");
                }
                for a in &log.artifacts {
                    println!("wrote {}", config.out.join(a).display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        None => {
            let reports = config.serve.reports_dir.clone().unwrap_or_else(|| config.out.clone());
            match pipeline::start(&config.serve.host, config.serve.port, &config.serve.ui_dir, &reports) {
                Ok(handle) => {
                    println!("serving http://{} (ui {}, reports {})", handle.addr, config.serve.ui_dir.display(), reports.display());
                    handle.join();
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
    }
}
