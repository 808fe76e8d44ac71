//! Rank attributes by the composite of normalized average correlation, VIF
//! and PCA contribution.

use nalgebra::DMatrix;
use playerseg::features::{composite_score, rank_features, write_scores_csv, ScoreFormula};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> playerseg::Result<()> {
    // carteam_leader_num's published normalized columns.
    let score = composite_score(0.396105, 0.0, 0.0, ScoreFormula::Table);
    println!("carteam_leader_num composite = {score:.6}");

    // Six attributes: two nearly collinear pairs and two independent ones.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 500;
    let m = DMatrix::from_fn(n, 6, |_, _| rng.random_range(-1.0..1.0));
    let mut m = m.clone();
    for i in 0..n {
        m[(i, 1)] = m[(i, 0)] * 2.0 + 0.05 * rng.random_range(-1.0..1.0);
        m[(i, 3)] = m[(i, 2)] - 0.1 * rng.random_range(-1.0..1.0);
    }
    let names: Vec<String> = ["leader", "leader_x2", "damage", "damage_alt", "friends", "level"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let scores = rank_features(&m, &names, ScoreFormula::Table)?;
    println!("{:<12} {:>8} {:>8} {:>9} {:>7}", "feature", "avg_corr", "vif", "pca", "score");
    for s in &scores {
        println!(
            "{:<12} {:>8.4} {:>8.2} {:>9.4} {:>7.4}",
            s.feature, s.avg_correlation, s.vif, s.pca_contribution, s.score
        );
    }
    println!();
    write_scores_csv(&scores, std::io::stdout())
}
