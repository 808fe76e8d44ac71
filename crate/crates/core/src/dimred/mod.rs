//! Two-dimensional projections for cluster scatter plots.

mod pca;
mod tsne;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub(crate) use pca::principal_axes;
pub use pca::{pca_fit, pca_project, PcaModel};
pub use tsne::{joint_probabilities, kl_divergence, kl_gradient, tsne, TsneOptions, TsneResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMethod {
    Pca,
    Tsne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection2D {
    pub ids: Vec<String>,
    pub coords: Vec<[f64; 2]>,
    pub method: ProjectionMethod,
    pub params: BTreeMap<String, f64>,
}

impl Projection2D {
    /// Coordinates as an N×2 matrix.
    pub fn to_matrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.coords.len(), 2, |i, j| self.coords[i][j])
    }
}
