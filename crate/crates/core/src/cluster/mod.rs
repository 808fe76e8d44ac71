//! k-means over static vectors and over multivariate time series.

mod ari;
mod kmeans;

pub use ari::adjusted_rand_index;
pub use kmeans::{
    init_centroids, kmeans, lloyd, objective, ts_kmeans, ClusterModel, ClusterModelFile,
    InitMethod, KMeansOptions,
};
