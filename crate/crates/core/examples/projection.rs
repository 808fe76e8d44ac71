//! 2-D PCA and t-SNE projections of clustered feature vectors.

use nalgebra::DMatrix;
use playerseg::cluster::{adjusted_rand_index, kmeans, KMeansOptions};
use playerseg::dimred::{pca_fit, pca_project, tsne, TsneOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> playerseg::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (n, d) = (150, 8);
    let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
    let m = DMatrix::from_fn(n, d, |i, j| {
        let shift = if j == labels[i] { 6.0 } else { 0.0 };
        shift + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
    });
    let ids: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();

    let model = pca_fit(&m, 2)?;
    println!("PCA explained variance ratio {:.3?}", model.explained_variance_ratio);
    let pca = pca_project(&model, &m, &ids)?;

    let res = tsne(&m, &ids, &TsneOptions { seed: 2, ..Default::default() })?;
    if let Some((it, kl)) = res.kl_history.last() {
        println!("t-SNE KL(P||Q) = {kl:.4} after {it} iterations");
    }

    for (name, proj) in [("pca", &pca), ("tsne", &res.projection)] {
        let km = kmeans(&proj.to_matrix(), 3, &KMeansOptions::default())?;
        println!("{name}: k-means on 2-D coordinates, ARI {:.3}", adjusted_rand_index(&km.assignments, &labels)?);
    }
    println!("first rows (id, x, y):");
    for (id, xy) in res.projection.ids.iter().zip(&res.projection.coords).take(3) {
        println!("  {id} {:.3} {:.3}", xy[0], xy[1]);
    }
    Ok(())
}
