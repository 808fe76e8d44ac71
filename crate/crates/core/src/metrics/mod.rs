//! Influence (PageRank), persistent key opinion leaders, network cohesion
//! and online-duration histograms.

mod cohesion;
mod histogram;
mod pagerank;

pub use cohesion::{
    avg_clustering_coefficient, cluster_subgraph_stats, connected_components, network_stats,
    node_triangles, triangle_count, write_metrics_csv, ClusterNetworkRow, Components,
    NetworkStats,
};
pub use histogram::{duration_histogram, write_histogram_csv};
pub use pagerank::{
    pagerank, persistent_kols, top_k_influencers, KolReport, PageRankOptions, PageRankResult,
};
