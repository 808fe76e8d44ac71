//! Node embeddings: DeepWalk (random walks + skip-gram with negative
//! sampling) and LINE (first/second-order proximity with edge sampling).

mod alias;
mod line;
mod skipgram;
mod walks;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use alias::AliasTable;
pub use line::{line_train, LineOptions, LineOrder};
pub use skipgram::{sgns_loss_and_grad, skipgram_train, PairGrad, SkipGramOptions};
pub use walks::{random_walks, WalkCorpus};

use crate::cluster::{kmeans, ClusterModel, KMeansOptions};
use crate::error::{Error, Result};
use crate::ingest::SocialGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    pub node_ids: Vec<String>,
    pub dim: usize,
    /// One row per node, aligned with `node_ids`.
    pub vectors: Vec<Vec<f64>>,
    /// Present only for second-order LINE.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_vectors: Option<Vec<Vec<f64>>>,
}

impl EmbeddingMatrix {
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.vectors.len(), self.dim, |i, j| self.vectors[i][j])
    }

    /// Rows scaled to unit length; zero rows stay zero.
    pub fn normalized_rows(&self) -> DMatrix<f64> {
        let mut m = self.to_matrix();
        for mut row in m.row_iter_mut() {
            let norm = row.norm();
            if norm > 0.0 {
                row /= norm;
            }
        }
        m
    }

    /// `node_id,v0,...,v{dim-1}`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["node_id".to_string()];
        header.extend((0..self.dim).map(|k| format!("v{k}")));
        w.write_record(&header)?;
        for (id, row) in self.node_ids.iter().zip(&self.vectors) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|x| x.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// An embedding together with its loss trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRun {
    pub embedding: EmbeddingMatrix,
    pub losses: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedMethod {
    #[default]
    DeepWalk,
    Line,
}

impl std::str::FromStr for EmbedMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "deepwalk" => Ok(Self::DeepWalk),
            "line" => Ok(Self::Line),
            other => Err(Error::InvalidArgument(format!("unknown embedding method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedOptions {
    pub method: EmbedMethod,
    pub dim: usize,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub line_order: LineOrder,
    pub line_samples: Option<usize>,
    pub lr_start: f64,
    pub lr_end: f64,
    pub seed: u64,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        Self {
            method: EmbedMethod::DeepWalk,
            dim: 64,
            walks_per_node: 10,
            walk_length: 40,
            window: 5,
            negatives: 5,
            epochs: 5,
            line_order: LineOrder::First,
            line_samples: None,
            lr_start: 0.025,
            lr_end: 0.0001,
            seed: 0,
        }
    }
}

pub fn embed_graph(graph: &SocialGraph, opts: &EmbedOptions) -> Result<TrainingRun> {
    match opts.method {
        EmbedMethod::DeepWalk => {
            let corpus = random_walks(graph, opts.walks_per_node, opts.walk_length, opts.seed)?;
            skipgram_train(
                &corpus,
                graph.node_ids(),
                &SkipGramOptions {
                    dim: opts.dim,
                    window: opts.window,
                    negatives: opts.negatives,
                    epochs: opts.epochs,
                    lr_start: opts.lr_start,
                    lr_end: opts.lr_end,
                    seed: opts.seed,
                },
            )
        }
        EmbedMethod::Line => line_train(
            graph,
            &LineOptions {
                dim: opts.dim,
                order: opts.line_order,
                negatives: opts.negatives,
                samples: opts.line_samples,
                lr_start: opts.lr_start,
                lr_end: opts.lr_end,
                checkpoints: 10,
                seed: opts.seed,
            },
        ),
    }
}

/// Embeds the graph and runs k-means on the L2-normalized embedding rows.
pub fn embed_and_cluster(
    graph: &SocialGraph,
    k: usize,
    opts: &EmbedOptions,
    kmeans_opts: &KMeansOptions,
) -> Result<(EmbeddingMatrix, ClusterModel)> {
    let run = embed_graph(graph, opts)?;
    let model = kmeans(&run.embedding.normalized_rows(), k, kmeans_opts)?;
    Ok((run.embedding, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::adjusted_rand_index;
    use crate::ingest::planted_partition;

    #[test]
    fn json_shape() {
        let e = EmbeddingMatrix {
            node_ids: vec!["a".into()],
            dim: 2,
            vectors: vec![vec![0.5, -1.0]],
            context_vectors: None,
        };
        assert_eq!(
            serde_json::to_string(&e).unwrap(),
            r#"{"node_ids":["a"],"dim":2,"vectors":[[0.5,-1.0]]}"#
        );
        let mut out = Vec::new();
        e.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "node_id,v0,v1\na,0.5,-1\n");
    }

    #[test]
    fn k_one_is_single_cluster() {
        let (g, _) = planted_partition(2, 10, 0.5, 0.05, 0);
        let opts = EmbedOptions { dim: 8, walks_per_node: 2, walk_length: 10, epochs: 1, ..Default::default() };
        let (_, model) = embed_and_cluster(&g, 1, &opts, &KMeansOptions::default()).unwrap();
        assert!(model.assignments.iter().all(|&a| a == 0));
    }

    #[test]
    fn planted_partition_recovered() {
        let (g, labels) = planted_partition(2, 30, 0.3, 0.02, 1);
        for method in [EmbedMethod::DeepWalk, EmbedMethod::Line] {
            let opts = EmbedOptions { method, ..Default::default() };
            let (_, model) = embed_and_cluster(&g, 2, &opts, &KMeansOptions::default()).unwrap();
            let ari = adjusted_rand_index(&model.assignments, &labels).unwrap();
            assert!(ari >= 0.9, "{method:?}: ari {ari}");
        }
    }

    #[test]
    fn method_from_str() {
        assert_eq!("DeepWalk".parse::<EmbedMethod>().unwrap(), EmbedMethod::DeepWalk);
        assert_eq!("line".parse::<EmbedMethod>().unwrap(), EmbedMethod::Line);
        assert!("node2vec".parse::<EmbedMethod>().is_err());
    }
}
