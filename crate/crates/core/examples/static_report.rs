//! Cluster players on static attributes and build the per-cluster
//! summary/density report consumed by the radar-violin UI.

use nalgebra::DMatrix;
use playerseg::cluster::{kmeans, KMeansOptions};
use playerseg::report::{build_report, validate_report_json};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> playerseg::Result<()> {
    let names: Vec<String> = ["segment", "level", "online_time"].iter().map(|s| s.to_string()).collect();
    let means = [[10.0, 20.0, 300.0], [40.0, 60.0, 900.0], [25.0, 5.0, 1500.0]];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 4.0).unwrap();
    let n = 240;
    let m = DMatrix::from_fn(n, 3, |i, j| means[i % 3][j] + noise.sample(&mut rng) * if j == 2 { 20.0 } else { 1.0 });

    let model = kmeans(&m, 3, &KMeansOptions::default())?;
    let report = build_report(&m, &names, &model.assignments, 3)?;
    let value = serde_json::to_value(&report)?;
    validate_report_json(&value)?;

    for c in &report.clusters {
        println!("cluster {} ({} players)", c.id, c.size);
        for (feature, stats) in &c.stats {
            if let Some(s) = stats {
                println!(
                    "  {feature:<12} min {:.3} q1 {:.3} median {:.3} q3 {:.3} max {:.3}",
                    s.min, s.q1, s.median, s.q3, s.max
                );
            }
        }
    }
    println!("density grid: {} points per violin", report.clusters[0].density["level"].len());
    Ok(())
}
