//! Player behavior segmentation: feature scoring, temporal and static
//! k-means, graph embeddings, influence and cohesion metrics, 2-D
//! projections and the cluster report consumed by the radar-violin UI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cluster;
pub mod dimred;
pub mod embed;
pub mod error;
pub mod features;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod rng;

pub use error::{Error, Result};
