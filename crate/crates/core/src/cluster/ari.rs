use std::collections::HashMap;

use crate::error::{Error, Result};

fn pairs(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Adjusted Rand index between two labelings of the same points.
pub fn adjusted_rand_index(labels_a: &[usize], labels_b: &[usize]) -> Result<f64> {
    if labels_a.len() != labels_b.len() {
        return Err(Error::LengthMismatch(labels_a.len(), labels_b.len()));
    }
    if labels_a.len() < 2 {
        return Err(Error::InvalidArgument("ARI needs at least 2 points".into()));
    }
    let mut table: HashMap<(usize, usize), usize> = HashMap::new();
    let mut rows: HashMap<usize, usize> = HashMap::new();
    let mut cols: HashMap<usize, usize> = HashMap::new();
    for (&a, &b) in labels_a.iter().zip(labels_b) {
        *table.entry((a, b)).or_default() += 1;
        *rows.entry(a).or_default() += 1;
        *cols.entry(b).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| pairs(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| pairs(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| pairs(c)).sum();
    let expected = sum_a * sum_b / pairs(labels_a.len());
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Rand-index pair counting over every point pair, then the Hubert–Arabie
    // adjustment written in terms of the four pair categories.
    fn pair_oracle(a: &[usize], b: &[usize]) -> f64 {
        let n = a.len();
        let (mut ss, mut sd, mut ds, mut dd) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                match (a[i] == a[j], b[i] == b[j]) {
                    (true, true) => ss += 1.0,
                    (true, false) => sd += 1.0,
                    (false, true) => ds += 1.0,
                    (false, false) => dd += 1.0,
                }
            }
        }
        2.0 * (ss * dd - sd * ds) / ((ss + sd) * (sd + dd) + (ss + ds) * (ds + dd))
    }

    #[test]
    fn identical_and_relabelled() {
        let a = [0, 0, 1, 1, 2, 2];
        assert_eq!(adjusted_rand_index(&a, &a).unwrap(), 1.0);
        let b = [2, 2, 0, 0, 1, 1];
        assert_eq!(adjusted_rand_index(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn crossed_labelling_matches_pair_count() {
        let a = [0, 0, 1, 1];
        let b = [0, 1, 0, 1];
        let got = adjusted_rand_index(&a, &b).unwrap();
        assert!((got - pair_oracle(&a, &b)).abs() < 1e-12);
        assert!((got + 0.5).abs() < 1e-12);
    }

    #[test]
    fn random_labellings_match_pair_count() {
        use rand::Rng;
        let mut rng = crate::rng::rng_for(5, &[]);
        for _ in 0..50 {
            let n = rng.random_range(4..30);
            let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
            let b: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let got = adjusted_rand_index(&a, &b).unwrap();
            let want = pair_oracle(&a, &b);
            if want.is_finite() {
                assert!((got - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            adjusted_rand_index(&[0, 1], &[0]),
            Err(Error::LengthMismatch(2, 1))
        ));
    }
}
