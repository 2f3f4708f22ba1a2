//! Probability vectors over state indices, evolved by push-forward through
//! the classical bijection.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config_state::StateIndex;
use crate::error::{Error, Result};
use crate::stats::{chi_square_test, sample_index, ChiSquareReport};
use crate::{stable_sum, PROBABILITY_TOLERANCE};

/// A probability `P_m` for every index `m` of a finite state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Ensemble {
    probabilities: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Ensemble {
    type Error = Error;

    fn try_from(p: Vec<f64>) -> Result<Self> {
        Ensemble::new(p)
    }
}

impl From<Ensemble> for Vec<f64> {
    fn from(e: Ensemble) -> Self {
        e.probabilities
    }
}

impl Ensemble {
    /// Validates non-negativity and `|sum - 1| <= 1e-12`.
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::InvalidDistribution("empty ensemble".into()));
        }
        if let Some((m, p)) = probabilities.iter().enumerate().find(|(_, p)| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidDistribution(format!("P[{m}] = {p} is not a finite non-negative number")));
        }
        let total = stable_sum(probabilities.iter().copied());
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        Ok(Self { probabilities })
    }

    /// Normalizes arbitrary non-negative weights into an ensemble.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total = stable_sum(weights.iter().copied());
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::ZeroWeight);
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn space_size(&self) -> usize {
        self.probabilities.len()
    }

    pub fn total(&self) -> f64 {
        stable_sum(self.probabilities.iter().copied())
    }

    /// Indices with non-zero probability, ascending.
    pub fn support(&self) -> Vec<StateIndex> {
        self.probabilities.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(m, _)| m).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.probabilities).expect("floats serialize")
    }
}

pub fn point_ensemble(m: StateIndex, size: usize) -> Result<Ensemble> {
    if m >= size {
        return Err(Error::IndexOutOfRange { index: m, size });
    }
    let mut p = vec![0.0; size];
    p[m] = 1.0;
    Ok(Ensemble { probabilities: p })
}

pub fn uniform_ensemble(size: usize) -> Result<Ensemble> {
    if size == 0 {
        return Err(Error::InvalidDistribution("empty state space".into()));
    }
    Ensemble::new(vec![1.0 / size as f64; size])
}

/// Checks that `map` is a permutation of `0..map.len()`.
pub fn check_bijection(map: &[StateIndex]) -> Result<()> {
    let mut seen = vec![false; map.len()];
    for &target in map {
        if target >= map.len() {
            return Err(Error::IndexOutOfRange { index: target, size: map.len() });
        }
        if std::mem::replace(&mut seen[target], true) {
            return Err(Error::NotBijective(target));
        }
    }
    Ok(())
}

/// `P'[map[m]] = P[m]`. Mass is moved, never recombined, so the total is preserved exactly.
pub fn push_forward(e: &Ensemble, map: &[StateIndex]) -> Result<Ensemble> {
    if map.len() != e.space_size() {
        return Err(Error::DimensionMismatch { expected: e.space_size(), actual: map.len() });
    }
    check_bijection(map)?;
    let mut out = vec![0.0; map.len()];
    for (m, &target) in map.iter().enumerate() {
        out[target] = e.probabilities[m];
    }
    Ok(Ensemble { probabilities: out })
}

/// Draws `m` with probability `P_m` (inverse CDF over index order).
pub fn sample<R: Rng + ?Sized>(e: &Ensemble, rng: &mut R) -> StateIndex {
    sample_index(&e.probabilities, rng).expect("valid ensembles carry unit mass")
}

/// Snaps every probability onto the grid `{0, 1/(K-1), ..., 1}` while keeping
/// the total at exactly `K - 1` grid units.
///
/// Each `P_m (K-1)` is floored and the missing units go to the largest
/// fractional remainders (ties to the lower index). This is the nearest grid
/// point to `P` on the simplex, and it is idempotent.
pub fn quantize(e: &Ensemble, k_levels: usize) -> Result<Ensemble> {
    if k_levels < 2 {
        return Err(Error::QuantizationTooCoarse(k_levels));
    }
    let units_total = (k_levels - 1) as u64;
    let scale = units_total as f64;
    let mut units = Vec::with_capacity(e.space_size());
    let mut remainders = Vec::with_capacity(e.space_size());
    for (m, p) in e.probabilities.iter().enumerate() {
        let scaled = p * scale;
        let nearest = scaled.round();
        let (whole, frac) = if (scaled - nearest).abs() < 1e-9 {
            (nearest, 0.0)
        } else {
            (scaled.floor(), scaled - scaled.floor())
        };
        units.push(whole as u64);
        remainders.push((frac, m));
    }
    let assigned: u64 = units.iter().sum();
    let missing = units_total.saturating_sub(assigned) as usize;
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, m) in remainders.iter().take(missing) {
        units[m] += 1;
    }
    if units.iter().all(|u| *u == 0) {
        return Err(Error::QuantizationTooCoarse(k_levels));
    }
    Ensemble::new(units.iter().map(|u| *u as f64 / scale).collect())
}

/// Draws `n` samples and tests their frequencies against `e`.
pub fn goodness_of_fit<R: Rng + ?Sized>(e: &Ensemble, n: u64, rng: &mut R) -> Result<ChiSquareReport> {
    let mut counts = vec![0u64; e.space_size()];
    for _ in 0..n {
        counts[sample(e, rng)] += 1;
    }
    chi_square_test(&counts, &e.probabilities)
}
