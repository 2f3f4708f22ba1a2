use serde::{Deserialize, Serialize};

use crate::amplitudes::{collapse_full, sparse_collapse, AmplitudeVector, BranchSet};
use crate::error::{Error, Result};
use crate::seeding::rng_from_seed;
use crate::stats::{chi_square_test, sample_index, ChiSquareReport};

/// Smallest trial count the harness accepts.
pub const MIN_BORN_TRIALS: u64 = 1000;

/// What is collapsed in a Born-rule trial.
#[derive(Debug, Clone, Copy)]
pub enum BornSource<'a> {
    Dense(&'a AmplitudeVector),
    Sparse(&'a BranchSet),
}

impl<'a> From<&'a AmplitudeVector> for BornSource<'a> {
    fn from(a: &'a AmplitudeVector) -> Self {
        BornSource::Dense(a)
    }
}

impl<'a> From<&'a BranchSet> for BornSource<'a> {
    fn from(b: &'a BranchSet) -> Self {
        BornSource::Sparse(b)
    }
}

/// Frequency table of `n` seeded collapses and its chi-square verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BornReport {
    pub seed: u64,
    pub n: u64,
    /// Outcome labels: state indices for dense sources, branch labels otherwise.
    pub labels: Vec<String>,
    pub expected: Vec<f64>,
    pub counts: Vec<u64>,
    pub chi_square: ChiSquareReport,
}

fn check_n(n: u64) -> Result<()> {
    if n < MIN_BORN_TRIALS {
        return Err(Error::InvalidConfig(format!("born trials need n >= {MIN_BORN_TRIALS}, got {n}")));
    }
    Ok(())
}

/// Collapses `source` `n` times from one seeded stream and tests the
/// outcome frequencies against the squared moduli.
pub fn born_trials<'a>(source: impl Into<BornSource<'a>>, n: u64, seed: u64) -> Result<BornReport> {
    check_n(n)?;
    let mut rng = rng_from_seed(seed);
    let (labels, expected, counts) = match source.into() {
        BornSource::Dense(a) => {
            a.check_norm()?;
            let mut counts = vec![0u64; a.space_size()];
            for _ in 0..n {
                counts[collapse_full(a, &mut rng).0] += 1;
            }
            let expected: Vec<f64> = a.moduli().iter().map(|r| r * r).collect();
            ((0..a.space_size()).map(|m| m.to_string()).collect(), expected, counts)
        }
        BornSource::Sparse(b) => {
            b.check_norm()?;
            let labels: Vec<String> = b.labels().into_iter().map(String::from).collect();
            let mut counts = vec![0u64; labels.len()];
            for _ in 0..n {
                let (label, _) = sparse_collapse(b, &mut rng)?;
                let i = labels.iter().position(|l| *l == label).expect("collapse returns a member label");
                counts[i] += 1;
            }
            (labels, b.branches().iter().map(|br| br.weight.norm_sqr()).collect(), counts)
        }
    };
    let chi_square = chi_square_test(&counts, &expected)?;
    Ok(BornReport { seed, n, labels, expected, counts, chi_square })
}

/// Power check: samples from `sampled` but tests against `expected`.
pub fn born_trials_against(sampled: &[f64], expected: &[f64], n: u64, seed: u64) -> Result<BornReport> {
    check_n(n)?;
    if sampled.len() != expected.len() {
        return Err(Error::DimensionMismatch { expected: expected.len(), actual: sampled.len() });
    }
    let mut rng = rng_from_seed(seed);
    let mut counts = vec![0u64; sampled.len()];
    for _ in 0..n {
        counts[sample_index(sampled, &mut rng)?] += 1;
    }
    let chi_square = chi_square_test(&counts, expected)?;
    Ok(BornReport {
        seed,
        n,
        labels: (0..sampled.len()).map(|m| m.to_string()).collect(),
        expected: expected.to_vec(),
        counts,
        chi_square,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn delta_has_zero_statistic() {
        let a = AmplitudeVector::delta(4, 9).unwrap();
        let r = born_trials(&a, 1000, 1).unwrap();
        assert_eq!(r.chi_square.statistic, 0.0);
        assert!(r.chi_square.pass);
        assert_eq!(r.counts[4], 1000);
    }

    #[test]
    fn uniform_nine_passes() {
        let a = AmplitudeVector::uniform(9).unwrap();
        let r = born_trials(&a, 100_000, 2).unwrap();
        assert!(r.chi_square.pass, "{:?}", r.chi_square);
    }

    #[test]
    fn sparse_source() {
        let b = BranchSet::from_weights([("a", Complex64::new(0.6, 0.0)), ("b", Complex64::new(0.0, 0.8))]).unwrap();
        let r = born_trials(&b, 20_000, 3).unwrap();
        assert_eq!(r.labels, vec!["a", "b"]);
        assert!(r.chi_square.pass);
    }

    #[test]
    fn swapped_distribution_fails() {
        let r = born_trials_against(&[0.1, 0.7, 0.2], &[0.7, 0.1, 0.2], 100_000, 4).unwrap();
        assert!(!r.chi_square.pass);
    }

    #[test]
    fn too_few_trials() {
        let a = AmplitudeVector::uniform(2).unwrap();
        assert!(born_trials(&a, 999, 0).is_err());
    }
}
