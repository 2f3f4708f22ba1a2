//! Sampling and goodness-of-fit helpers shared by the ensemble, amplitude and
//! experiment layers.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF};

use crate::error::{Error, Result};
use crate::stable_sum;

/// Significance level used by every Born-rule and sampling check.
pub const SIGNIFICANCE: f64 = 1e-3;

/// Draws an index with probability proportional to `weights[i]`, by
/// inverse CDF over index order. Consumes exactly one `f64` from `rng`.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    let total = stable_sum(weights.iter().copied());
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::ZeroWeight);
    }
    let u: f64 = rng.random::<f64>() * total;
    let mut cumulative = 0.0;
    let mut last_positive = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        cumulative += w;
        last_positive = Some(i);
        if u < cumulative {
            return Ok(i);
        }
    }
    // rounding in the running sum can leave u just past the end
    last_positive.ok_or(Error::ZeroWeight)
}

/// Result of a chi-square goodness-of-fit test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub dof: usize,
    pub critical_value: f64,
    pub pass: bool,
}

/// Pearson chi-square of `counts` against `expected` probabilities at
/// significance [`SIGNIFICANCE`].
///
/// Bins with zero expected probability do not contribute degrees of freedom;
/// any observation in such a bin makes the statistic infinite.
pub fn chi_square_test(counts: &[u64], expected: &[f64]) -> Result<ChiSquareReport> {
    chi_square_test_at(counts, expected, SIGNIFICANCE)
}

pub fn chi_square_test_at(counts: &[u64], expected: &[f64], significance: f64) -> Result<ChiSquareReport> {
    if counts.len() != expected.len() {
        return Err(Error::DimensionMismatch { expected: expected.len(), actual: counts.len() });
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::InvalidDistribution("no observations".into()));
    }
    let total_p = stable_sum(expected.iter().copied());
    let mut statistic = 0.0;
    let mut support = 0usize;
    for (&c, &p) in counts.iter().zip(expected) {
        let e = p / total_p * n as f64;
        if e > 0.0 {
            support += 1;
            let d = c as f64 - e;
            statistic += d * d / e;
        } else if c > 0 {
            statistic = f64::INFINITY;
        }
    }
    let dof = support.saturating_sub(1);
    let critical_value = if dof == 0 {
        0.0
    } else {
        ChiSquared::new(dof as f64)
            .map_err(|e| Error::InvalidDistribution(e.to_string()))?
            .inverse_cdf(1.0 - significance)
    };
    let pass = statistic <= critical_value;
    Ok(ChiSquareReport { statistic, dof, critical_value, pass })
}

/// Half-width of a `k`-sigma binomial interval for a frequency with success
/// probability `p` over `n` trials.
pub fn binomial_halfwidth(p: f64, n: u64, k: f64) -> f64 {
    k * (p * (1.0 - p) / n as f64).sqrt()
}

/// Outcome of a one-sided sign test on paired observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignTest {
    pub wins: u64,
    pub losses: u64,
    pub ties: u64,
    /// `P(X >= wins)` for `X ~ Binomial(wins + losses, 1/2)`; 1 when every pair ties.
    pub p_value: f64,
}

impl SignTest {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// One-sided sign test of the hypothesis `a > b` over paired samples.
pub fn sign_test(pairs: &[(f64, f64)]) -> SignTest {
    let mut wins = 0u64;
    let mut losses = 0u64;
    let mut ties = 0u64;
    for &(a, b) in pairs {
        if a > b {
            wins += 1;
        } else if a < b {
            losses += 1;
        } else {
            ties += 1;
        }
    }
    let n = wins + losses;
    let p_value = if n == 0 || wins == 0 {
        1.0
    } else {
        let binom = Binomial::new(0.5, n).expect("valid binomial");
        // P(X >= wins) = 1 - P(X <= wins - 1)
        binom.sf(wins - 1)
    };
    SignTest { wins, losses, ties, p_value }
}
