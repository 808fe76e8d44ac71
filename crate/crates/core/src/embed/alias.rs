use rand::Rng;

use crate::error::{Error, Result};

/// Walker/Vose alias table for O(1) sampling from a fixed discrete distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidArgument(format!("alias weight {w} must be finite and >= 0")));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::AllZeroWeights);
        }
        let n = weights.len();
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut prob = vec![1.0; n];
        let mut alias: Vec<usize> = (0..n).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| scaled[i] < 1.0);
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            prob[s] = scaled[s];
            alias[s] = l;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers are 1 up to rounding.
        for i in small.into_iter().chain(large) {
            prob[i] = 1.0;
            alias[i] = i;
        }
        Ok(Self { prob, alias })
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.prob
    }

    pub fn aliases(&self) -> &[usize] {
        &self.alias
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = rng.random_range(0..self.prob.len());
        if rng.random::<f64>() < self.prob[i] {
            i
        } else {
            self.alias[i]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;
    use proptest::prelude::*;

    // prob[i] + Σ_{alias[j]=i} (1 − prob[j]) must equal n·w_i/Σw.
    fn identity_error(weights: &[f64]) -> f64 {
        let t = AliasTable::new(weights).unwrap();
        let n = weights.len() as f64;
        let total: f64 = weights.iter().sum();
        let mut mass = t.probabilities().to_vec();
        for (j, &a) in t.aliases().iter().enumerate() {
            if a != j {
                mass[a] += 1.0 - t.probabilities()[j];
            }
        }
        mass.iter()
            .zip(weights)
            .map(|(m, w)| (m - n * w / total).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn uniform_pair() {
        let t = AliasTable::new(&[1.0, 1.0]).unwrap();
        assert_eq!(t.probabilities(), &[1.0, 1.0]);
        let mut rng = rng_for(0, &[]);
        let ones = (0..10_000).filter(|_| t.sample(&mut rng) == 1).count();
        assert!((ones as f64 / 10_000.0 - 0.5).abs() < 0.02);
    }

    #[test]
    fn three_to_one_frequencies() {
        let t = AliasTable::new(&[3.0, 1.0]).unwrap();
        let mut rng = rng_for(1, &[]);
        let zeros = (0..100_000).filter(|_| t.sample(&mut rng) == 0).count();
        assert!((zeros as f64 / 100_000.0 - 0.75).abs() <= 0.01);
    }

    #[test]
    fn zero_weight_never_drawn() {
        let t = AliasTable::new(&[0.0, 5.0]).unwrap();
        let mut rng = rng_for(2, &[]);
        assert!((0..1000).all(|_| t.sample(&mut rng) == 1));
    }

    #[test]
    fn errors() {
        assert!(matches!(AliasTable::new(&[0.0, 0.0]), Err(Error::AllZeroWeights)));
        assert!(matches!(AliasTable::new(&[]), Err(Error::AllZeroWeights)));
        assert!(AliasTable::new(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn seeded_sampling_is_deterministic() {
        let t = AliasTable::new(&[0.2, 0.5, 0.3]).unwrap();
        let draw = |seed| {
            let mut rng = rng_for(seed, &[]);
            (0..50).map(|_| t.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
    }

    proptest! {
        #[test]
        fn construction_identity(weights in prop::collection::vec(0.0f64..10.0, 1..64)) {
            prop_assume!(weights.iter().sum::<f64>() > 0.0);
            prop_assert!(identity_error(&weights) <= 1e-12);
        }

        #[test]
        fn probabilities_in_unit_interval(weights in prop::collection::vec(0.0f64..1e6, 1..64)) {
            prop_assume!(weights.iter().sum::<f64>() > 0.0);
            let t = AliasTable::new(&weights).unwrap();
            prop_assert!(t.probabilities().iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }
}
