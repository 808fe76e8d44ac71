//! Subcommand implementations shared by the `playerseg` binary and the
//! examples: configuration loading, artifact writing and the report server.

mod commands;
mod config;
mod serve;

pub use commands::{read_cluster_file, run, write_atomic, Command, RunLog, StageSeed};
pub use commands::{
    EMBEDDINGS_FILE, EMBEDDING_CLUSTERS_FILE, GROUND_TRUTH_FILE, HISTOGRAM_FILE, KOL_FILE, METRICS_FILE,
    PROJECTION_FILE, REPORT_FILE, SCORES_FILE, STATIC_CLUSTERS_FILE, TEMPORAL_CLUSTERS_FILE, TENSOR_FILE,
};
pub use config::{
    ClusterConfig, ClusterSource, KolConfig, MetricsConfig, PipelineConfig, ProjectConfig, ProjectionSource,
    ReportConfig, ScoreConfig, ServeConfig, SynthConfig,
};
pub use serve::{respond, start, Reply, ServeHandle};
