//! Snapshot and edge-list parsing, tensor assembly and synthetic data.

mod graph;
pub(crate) mod snapshot;
mod synthetic;
mod tensor;

pub use graph::{parse_edge_list, write_edge_list, Edge, EdgeList, GraphBuilder, SocialGraph};
pub use snapshot::{
    derive_mode_choice_ratio, mode_choice_ratio, parse_snapshots, PlayerSnapshot,
    FUNNY_MODE_GAMES, STATIC_FEATURES, TEMPORAL_FEATURES, TOTAL_GAMES,
};
pub use synthetic::{
    generate_synthetic, planted_partition, planted_partition_graph, PlantedPartition,
    SyntheticData, SyntheticSpec,
};
pub use tensor::{assemble_tensor, TimeSeriesTensor};
