//! Quantum description of the lattice: one complex amplitude
//! `r_m (cos θ_m + i sin θ_m)` per state index, norm-preserving evolution,
//! and collapse events in dense and sparse-branch form.
//!
//! Evolution is the classical bijection lifted to a permutation of
//! amplitudes, followed by a diagonal phase advance `θ += phase_rate * E`,
//! where `E` is the nearest-neighbour squared-difference energy of the
//! pre-step configuration. Both parts are isometries, so the norm is
//! preserved up to rounding of the phase addition (moduli are only moved).
//!
//! Collapses are projective and Lüders-style: the surviving block is
//! renormalized and keeps its internal phases.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config_state::{DynamicalState, LatticeConfig, StateIndex};
use crate::ensemble::{check_bijection, Ensemble};
use crate::error::{Error, Result};
use crate::stats::sample_index;
use crate::{stable_sum, NORM_TOLERANCE};

fn reduce_phase(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawAmplitudes {
    moduli: Vec<f64>,
    phases: Vec<f64>,
}

/// Dense amplitude vector stored as moduli and phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAmplitudes", into = "RawAmplitudes")]
pub struct AmplitudeVector {
    moduli: Vec<f64>,
    phases: Vec<f64>,
}

impl TryFrom<RawAmplitudes> for AmplitudeVector {
    type Error = Error;

    fn try_from(raw: RawAmplitudes) -> Result<Self> {
        AmplitudeVector::new(raw.moduli, raw.phases)
    }
}

impl From<AmplitudeVector> for RawAmplitudes {
    fn from(a: AmplitudeVector) -> Self {
        RawAmplitudes { moduli: a.moduli, phases: a.phases }
    }
}

impl AmplitudeVector {
    /// Validates `r_m >= 0`, `|sum r_m^2 - 1| <= 1e-10` and reduces phases to `[0, 2π)`.
    pub fn new(moduli: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if moduli.len() != phases.len() {
            return Err(Error::DimensionMismatch { expected: moduli.len(), actual: phases.len() });
        }
        if moduli.is_empty() {
            return Err(Error::InvalidDistribution("empty amplitude vector".into()));
        }
        if moduli.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(Error::InvalidDistribution("moduli must be finite and non-negative".into()));
        }
        if phases.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidDistribution("phases must be finite".into()));
        }
        let a = Self { moduli, phases: phases.into_iter().map(reduce_phase).collect() };
        a.check_norm()?;
        Ok(a)
    }

    pub fn delta(m: StateIndex, size: usize) -> Result<Self> {
        if m >= size {
            return Err(Error::IndexOutOfRange { index: m, size });
        }
        let mut moduli = vec![0.0; size];
        moduli[m] = 1.0;
        Ok(Self { moduli, phases: vec![0.0; size] })
    }

    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidDistribution("empty amplitude vector".into()));
        }
        Self::new(vec![(1.0 / size as f64).sqrt(); size], vec![0.0; size])
    }

    pub fn moduli(&self) -> &[f64] {
        &self.moduli
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn space_size(&self) -> usize {
        self.moduli.len()
    }

    pub fn amplitude(&self, m: StateIndex) -> Complex64 {
        Complex64::from_polar(self.moduli[m], self.phases[m])
    }

    pub fn norm_squared(&self) -> f64 {
        stable_sum(self.moduli.iter().map(|r| r * r))
    }

    pub fn support(&self) -> Vec<StateIndex> {
        self.moduli.iter().enumerate().filter(|(_, r)| **r > 0.0).map(|(m, _)| m).collect()
    }

    pub fn check_norm(&self) -> Result<()> {
        let n = self.norm_squared();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvariantViolation(format!("amplitude norm^2 = {n}")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&RawAmplitudes { moduli: self.moduli.clone(), phases: self.phases.clone() })
            .expect("floats serialize")
    }
}

/// `r_m = sqrt(P_m)`, `θ_m = initial_phases[m]`.
pub fn lift(e: &Ensemble, initial_phases: &[f64]) -> Result<AmplitudeVector> {
    if initial_phases.len() != e.space_size() {
        return Err(Error::DimensionMismatch { expected: e.space_size(), actual: initial_phases.len() });
    }
    AmplitudeVector::new(e.probabilities().iter().map(|p| p.sqrt()).collect(), initial_phases.to_vec())
}

/// `P_m = r_m^2` (divided by the norm, which is 1 up to rounding).
pub fn probabilities(a: &AmplitudeVector) -> Ensemble {
    let squares: Vec<f64> = a.moduli.iter().map(|r| r * r).collect();
    let total = stable_sum(squares.iter().copied());
    Ensemble::new(squares.iter().map(|p| p / total).collect()).expect("amplitude vectors have unit norm")
}

/// Sum over ring edges `(i, i+1)` and fields of the squared difference of the current configuration.
#[derive(Debug, Clone, Copy, Default)]
pub struct EnergyFunction;

impl EnergyFunction {
    pub fn evaluate(&self, state: &DynamicalState) -> f64 {
        let cfg = state.config();
        let n = cfg.n_sites();
        let edges = match n {
            1 => 0,
            2 => 1,
            _ => n,
        };
        let mut e = 0i128;
        for i in 0..edges {
            for j in 0..cfg.n_fields() {
                let d = state.current.get(i, j) as i128 - state.current.get((i + 1) % n, j) as i128;
                e += d * d;
            }
        }
        e as f64
    }
}

/// Precomputed permutation and phase increments for repeated unitary steps.
#[derive(Debug, Clone)]
pub struct QuantumDynamics {
    successor: Vec<StateIndex>,
    phase_increment: Vec<f64>,
}

impl QuantumDynamics {
    pub fn new(cfg: &LatticeConfig) -> Result<Self> {
        let size = cfg.dense_space_size()?;
        let energy = EnergyFunction;
        let mut successor = Vec::with_capacity(size);
        let mut phase_increment = Vec::with_capacity(size);
        for m in 0..size {
            let s = DynamicalState::decode(m, cfg)?;
            successor.push(s.step_classical().encode());
            phase_increment.push(cfg.phase_rate() * energy.evaluate(&s));
        }
        check_bijection(&successor)?;
        Ok(Self { successor, phase_increment })
    }

    pub fn space_size(&self) -> usize {
        self.successor.len()
    }

    pub fn successor(&self) -> &[StateIndex] {
        &self.successor
    }

    pub fn step(&self, a: &AmplitudeVector) -> Result<AmplitudeVector> {
        if a.space_size() != self.space_size() {
            return Err(Error::DimensionMismatch { expected: self.space_size(), actual: a.space_size() });
        }
        let mut moduli = vec![0.0; a.space_size()];
        let mut phases = vec![0.0; a.space_size()];
        // targets are distinct, so each slot is written once
        for (m, &target) in self.successor.iter().enumerate() {
            moduli[target] = a.moduli[m];
            phases[target] = reduce_phase(a.phases[m] + self.phase_increment[m]);
        }
        Ok(AmplitudeVector { moduli, phases })
    }
}

/// One step of permutation-plus-phase evolution on the dynamical space of `cfg`.
pub fn unitary_step(a: &AmplitudeVector, cfg: &LatticeConfig) -> Result<AmplitudeVector> {
    QuantumDynamics::new(cfg)?.step(a)
}

/// Total assignment of state indices to block labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    assignment: Vec<usize>,
}

impl Partition {
    pub fn new(assignment: Vec<usize>) -> Self {
        Self { assignment }
    }

    /// One block containing everything.
    pub fn trivial(size: usize) -> Self {
        Self { assignment: vec![0; size] }
    }

    /// Every index in its own block, labelled by the index.
    pub fn discrete(size: usize) -> Self {
        Self { assignment: (0..size).collect() }
    }

    pub fn from_fn(size: usize, f: impl Fn(StateIndex) -> usize) -> Self {
        Self { assignment: (0..size).map(f).collect() }
    }

    /// Blocks by the value of `field` at `site` in the current configuration.
    /// Labels are `value + L`. Works on both configuration and dynamical spaces.
    pub fn by_site_value(cfg: &LatticeConfig, size: usize, site: usize, field: usize) -> Result<Self> {
        if size != cfg.dynamical_state_count() && size != cfg.configuration_count() {
            return Err(Error::DimensionMismatch { expected: cfg.dynamical_state_count(), actual: size });
        }
        if site >= cfg.n_sites() || field >= cfg.n_fields() {
            return Err(Error::IndexOutOfRange { index: site * cfg.n_fields() + field, size: cfg.slots() });
        }
        let slot = site * cfg.n_fields() + field;
        let stride = cfg.base().pow(slot as u32);
        let base = cfg.base();
        Ok(Self::from_fn(size, |m| (m / stride) % base))
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn block_of(&self, m: StateIndex) -> usize {
        self.assignment[m]
    }

    /// Distinct block labels, ascending.
    pub fn blocks(&self) -> Vec<usize> {
        let mut b = self.assignment.clone();
        b.sort_unstable();
        b.dedup();
        b
    }

    fn check_covers(&self, a: &AmplitudeVector) -> Result<()> {
        if self.assignment.len() != a.space_size() {
            return Err(Error::DimensionMismatch { expected: a.space_size(), actual: self.assignment.len() });
        }
        Ok(())
    }
}

/// `weight(B) = sum_{m in B} r_m^2`, for every block in ascending label order.
pub fn branch_weights(a: &AmplitudeVector, p: &Partition) -> Result<Vec<(usize, f64)>> {
    p.check_covers(a)?;
    let mut blocks: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (m, r) in a.moduli.iter().enumerate() {
        blocks.entry(p.assignment[m]).or_default().push(r * r);
    }
    Ok(blocks.into_iter().map(|(label, sq)| (label, stable_sum(sq))).collect())
}

/// Samples `m` with probability `r_m^2` and returns the delta on it.
/// Phases are left untouched.
pub fn collapse_full<R: Rng + ?Sized>(a: &AmplitudeVector, rng: &mut R) -> (StateIndex, AmplitudeVector) {
    let squares: Vec<f64> = a.moduli.iter().map(|r| r * r).collect();
    let m = sample_index(&squares, rng).expect("unit-norm vector has positive weight");
    let mut moduli = vec![0.0; a.space_size()];
    moduli[m] = 1.0;
    (m, AmplitudeVector { moduli, phases: a.phases.clone() })
}

/// Samples a block with probability equal to its weight, zeroes everything
/// outside it and renormalizes inside it.
///
/// Blocks are sampled in ascending label order with the same inverse-CDF
/// draw as [`collapse_full`], so the discrete partition reproduces it.
pub fn collapse_partition<R: Rng + ?Sized>(
    a: &AmplitudeVector,
    p: &Partition,
    rng: &mut R,
) -> Result<(usize, AmplitudeVector)> {
    let weights = branch_weights(a, p)?;
    let masses: Vec<f64> = weights.iter().map(|(_, w)| *w).collect();
    let chosen = sample_index(&masses, rng)?;
    let (label, mass) = weights[chosen];
    let members: Vec<StateIndex> =
        (0..a.space_size()).filter(|m| p.assignment[*m] == label && a.moduli[*m] > 0.0).collect();
    let mut moduli = vec![0.0; a.space_size()];
    if members.len() == 1 {
        moduli[members[0]] = 1.0;
    } else {
        let scale = mass.sqrt();
        for &m in &members {
            moduli[m] = a.moduli[m] / scale;
        }
    }
    let out = AmplitudeVector { moduli, phases: a.phases.clone() };
    out.check_norm()?;
    Ok((label, out))
}

/// Projective measurement of one field value at one site.
pub fn collapse_site<R: Rng + ?Sized>(
    a: &AmplitudeVector,
    site: usize,
    field: usize,
    cfg: &LatticeConfig,
    rng: &mut R,
) -> Result<(i64, AmplitudeVector)> {
    let p = Partition::by_site_value(cfg, a.space_size(), site, field)?;
    let (label, post) = collapse_partition(a, &p, rng)?;
    Ok((label as i64 - cfg.half_range() as i64, post))
}

/// One classically labelled component of a superposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub label: String,
    pub weight: Complex64,
    /// Label of the coarser branch this one refines, if it came from a split.
    pub parent: Option<String>,
}

/// Sparse superposition of labelled branches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSet {
    branches: Vec<Branch>,
}

impl BranchSet {
    /// Validates distinct labels and `|sum |w|^2 - 1| <= 1e-10`.
    pub fn new(branches: Vec<Branch>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::EmptyBranchSet);
        }
        let mut labels: Vec<&str> = branches.iter().map(|b| b.label.as_str()).collect();
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateLabel(w[0].to_string()));
        }
        let set = Self { branches };
        set.check_norm()?;
        Ok(set)
    }

    pub fn from_weights<S: Into<String>>(items: impl IntoIterator<Item = (S, Complex64)>) -> Result<Self> {
        Self::new(items.into_iter().map(|(l, w)| Branch { label: l.into(), weight: w, parent: None }).collect())
    }

    pub fn delta(label: impl Into<String>) -> Self {
        Self { branches: vec![Branch { label: label.into(), weight: Complex64::new(1.0, 0.0), parent: None }] }
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.branches.iter().map(|b| b.label.as_str()).collect()
    }

    /// `(label, |w|^2)` in branch order.
    pub fn weights(&self) -> Vec<(String, f64)> {
        self.branches.iter().map(|b| (b.label.clone(), b.weight.norm_sqr())).collect()
    }

    pub fn norm_squared(&self) -> f64 {
        stable_sum(self.branches.iter().map(|b| b.weight.norm_sqr()))
    }

    pub fn check_norm(&self) -> Result<()> {
        let n = self.norm_squared();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvariantViolation(format!("branch norm^2 = {n}")));
        }
        Ok(())
    }

    /// Splits every branch into `label + suffix` children with weight
    /// `parent * factor`. The factors must have unit total `|f|^2`.
    pub fn split(&self, factors: &[(&str, Complex64)]) -> Result<Self> {
        let f_norm = stable_sum(factors.iter().map(|(_, f)| f.norm_sqr()));
        if (f_norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvariantViolation(format!("split factors have norm^2 {f_norm}")));
        }
        let mut out = Vec::with_capacity(self.branches.len() * factors.len());
        for b in &self.branches {
            for (suffix, f) in factors {
                out.push(Branch {
                    label: format!("{}{}", b.label, suffix),
                    weight: b.weight * f,
                    parent: Some(b.label.clone()),
                });
            }
        }
        Self::new(out)
    }
}

/// Samples a branch with probability `|w|^2`; the result is the delta on it,
/// keeping the branch's phase.
pub fn sparse_collapse<R: Rng + ?Sized>(b: &BranchSet, rng: &mut R) -> Result<(String, BranchSet)> {
    if b.branches.is_empty() {
        return Err(Error::EmptyBranchSet);
    }
    let masses: Vec<f64> = b.branches.iter().map(|br| br.weight.norm_sqr()).collect();
    let i = sample_index(&masses, rng)?;
    let chosen = &b.branches[i];
    let phase = chosen.weight.arg();
    let post = BranchSet {
        branches: vec![Branch {
            label: chosen.label.clone(),
            weight: Complex64::from_polar(1.0, phase),
            parent: chosen.parent.clone(),
        }],
    };
    Ok((chosen.label.clone(), post))
}

/// `label,weight` CSV with a header row.
pub fn branch_weights_csv<L: std::fmt::Display>(weights: &[(L, f64)]) -> String {
    let mut out = String::from("label,weight\n");
    for (label, w) in weights {
        out.push_str(&format!("{label},{w:e}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::point_ensemble;
    use crate::seeding::rng_from_seed;

    #[test]
    fn phases_are_reduced() {
        let a = AmplitudeVector::new(vec![1.0, 0.0], vec![-0.5, 7.0]).unwrap();
        assert!((a.phases()[0] - (TAU - 0.5)).abs() < 1e-15);
        assert!((a.phases()[1] - (7.0 - TAU)).abs() < 1e-15);
        assert!(a.phases().iter().all(|t| (0.0..TAU).contains(t)));
        assert_eq!(reduce_phase(-1e-300), 0.0);
    }

    #[test]
    fn validation() {
        assert!(AmplitudeVector::new(vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(AmplitudeVector::new(vec![1.0], vec![0.0, 0.0]).is_err());
        assert!(AmplitudeVector::new(vec![-1.0], vec![0.0]).is_err());
        let json = r#"{"moduli":[0.6,0.8],"phases":[0.0,1.0]}"#;
        let a: AmplitudeVector = serde_json::from_str(json).unwrap();
        assert_eq!(a.to_json(), r#"{"moduli":[0.6,0.8],"phases":[0.0,1.0]}"#);
        assert!(serde_json::from_str::<AmplitudeVector>(r#"{"moduli":[0.6,0.6],"phases":[0,0]}"#).is_err());
    }

    #[test]
    fn lift_examples() {
        let d = point_ensemble(3, 5).unwrap();
        let a = lift(&d, &[0.0; 5]).unwrap();
        assert_eq!(a.moduli(), &[0.0, 0.0, 0.0, 1.0, 0.0]);
        let e = Ensemble::new(vec![0.25, 0.75]).unwrap();
        let a = lift(&e, &[0.0, 0.0]).unwrap();
        assert_eq!(a.moduli(), &[0.5, 0.75f64.sqrt()]);
        assert!(lift(&e, &[0.0]).is_err());
        let u = AmplitudeVector::uniform(9).unwrap();
        for p in probabilities(&u).probabilities() {
            assert!((p - 1.0 / 9.0).abs() < 1e-15);
        }
        assert_eq!(probabilities(&AmplitudeVector::delta(2, 4).unwrap()), point_ensemble(2, 4).unwrap());
    }

    #[test]
    fn pure_permutation_moves_delta_to_successor() {
        let cfg = LatticeConfig::small(1, 1, 1).unwrap();
        let dynamics = QuantumDynamics::new(&cfg).unwrap();
        for m in 0..9 {
            let a = AmplitudeVector::delta(m, 9).unwrap();
            let next = unitary_step(&a, &cfg).unwrap();
            let succ = DynamicalState::decode(m, &cfg).unwrap().step_classical().encode();
            assert_eq!(next, AmplitudeVector::delta(succ, 9).unwrap());
            assert_eq!(dynamics.successor()[m], succ);
        }
    }

    #[test]
    fn phase_advance_uses_energy() {
        let cfg = LatticeConfig::new(2, 1, 1, 1, 1, 0.5).unwrap();
        let s = DynamicalState::excitation(&cfg, 0, 0, 1).unwrap();
        assert_eq!(EnergyFunction.evaluate(&s), 1.0);
        let m = s.encode();
        let a = AmplitudeVector::delta(m, cfg.dynamical_state_count()).unwrap();
        let next = unitary_step(&a, &cfg).unwrap();
        let target = s.step_classical().encode();
        assert!((next.phases()[target] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn energy_on_three_site_ring() {
        let cfg = LatticeConfig::small(3, 1, 1).unwrap();
        let s = DynamicalState::excitation(&cfg, 1, 0, -1).unwrap();
        // edges (0,1), (1,2), (2,0): 1 + 1 + 0
        assert_eq!(EnergyFunction.evaluate(&s), 2.0);
        assert_eq!(EnergyFunction.evaluate(&DynamicalState::zeros(&cfg)), 0.0);
    }

    #[test]
    fn delta_collapse_is_identity() {
        let a = AmplitudeVector::new(vec![0.0, 1.0, 0.0], vec![0.1, 0.2, 0.3]).unwrap();
        for seed in 0..10 {
            let (m, post) = collapse_full(&a, &mut rng_from_seed(seed));
            assert_eq!(m, 1);
            assert_eq!(post, a);
        }
    }

    #[test]
    fn trivial_partition_is_identity() {
        let a = AmplitudeVector::new(vec![0.6, 0.8], vec![1.0, 2.0]).unwrap();
        let (label, post) = collapse_partition(&a, &Partition::trivial(2), &mut rng_from_seed(1)).unwrap();
        assert_eq!(label, 0);
        for (x, y) in post.moduli().iter().zip(a.moduli()) {
            assert!((x - y).abs() < 1e-15);
        }
        assert_eq!(post.phases(), a.phases());
    }

    #[test]
    fn discrete_partition_matches_full_collapse() {
        let a = AmplitudeVector::new(vec![0.5, 0.5, 0.5, 0.5], vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        for seed in 0..200 {
            let (m, full) = collapse_full(&a, &mut rng_from_seed(seed));
            let (label, part) = collapse_partition(&a, &Partition::discrete(4), &mut rng_from_seed(seed)).unwrap();
            assert_eq!(m, label);
            assert_eq!(full, part);
        }
    }

    #[test]
    fn partition_keeps_relative_phases() {
        let a = AmplitudeVector::new(vec![0.5, 0.5, 0.5, 0.5], vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let p = Partition::new(vec![0, 0, 1, 1]);
        let (label, post) = collapse_partition(&a, &p, &mut rng_from_seed(4)).unwrap();
        for m in 0..4 {
            if p.block_of(m) == label {
                assert!((post.moduli()[m] - 0.5f64.sqrt()).abs() < 1e-15);
            } else {
                assert_eq!(post.moduli()[m], 0.0);
            }
        }
        assert_eq!(post.phases(), a.phases());
        // repeating the measurement is certain and leaves the state alone
        let (again, post2) = collapse_partition(&post, &p, &mut rng_from_seed(99)).unwrap();
        assert_eq!(again, label);
        for (x, y) in post.moduli().iter().zip(post2.moduli()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn partition_size_mismatch() {
        let a = AmplitudeVector::uniform(4).unwrap();
        assert!(branch_weights(&a, &Partition::trivial(3)).is_err());
    }

    #[test]
    fn branch_weight_examples() {
        let a = AmplitudeVector::uniform(4).unwrap();
        let w = branch_weights(&a, &Partition::trivial(4)).unwrap();
        assert_eq!(w.len(), 1);
        assert!((w[0].1 - 1.0).abs() < 1e-15);
        let d = AmplitudeVector::delta(2, 4).unwrap();
        let w = branch_weights(&d, &Partition::new(vec![0, 0, 1, 1])).unwrap();
        assert_eq!(w, vec![(0, 0.0), (1, 1.0)]);
    }

    #[test]
    fn site_measurement_on_delta() {
        let cfg = LatticeConfig::small(2, 1, 1).unwrap();
        let s = DynamicalState::excitation(&cfg, 1, 0, -1).unwrap();
        let a = AmplitudeVector::delta(s.encode(), cfg.dynamical_state_count()).unwrap();
        let (v0, post) = collapse_site(&a, 0, 0, &cfg, &mut rng_from_seed(0)).unwrap();
        assert_eq!(v0, 0);
        assert_eq!(post, a);
        let (v1, _) = collapse_site(&a, 1, 0, &cfg, &mut rng_from_seed(0)).unwrap();
        assert_eq!(v1, -1);
        assert!(collapse_site(&a, 2, 0, &cfg, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn branch_set_validation_and_split() {
        assert_eq!(BranchSet::new(vec![]), Err(Error::EmptyBranchSet));
        let dup = BranchSet::from_weights([("a", Complex64::new(0.6, 0.0)), ("a", Complex64::new(0.8, 0.0))]);
        assert_eq!(dup, Err(Error::DuplicateLabel("a".into())));
        assert!(BranchSet::from_weights([("a", Complex64::new(0.6, 0.0))]).is_err());
        let half = Complex64::new(0.5f64.sqrt(), 0.0);
        let b = BranchSet::delta("").split(&[("0", half), ("1", half)]).unwrap();
        assert_eq!(b.labels(), vec!["0", "1"]);
        assert_eq!(b.branches()[1].parent.as_deref(), Some(""));
        for (_, w) in b.weights() {
            assert!((w - 0.5).abs() < 1e-15);
        }
        assert!(b.split(&[("x", half)]).is_err());
    }

    #[test]
    fn sparse_collapse_single_and_phase() {
        let b = BranchSet::from_weights([("only", Complex64::from_polar(1.0, 0.7))]).unwrap();
        let (label, post) = sparse_collapse(&b, &mut rng_from_seed(3)).unwrap();
        assert_eq!(label, "only");
        assert!((post.branches()[0].weight - b.branches()[0].weight).norm() < 1e-15);
    }

    #[test]
    fn csv_format() {
        let csv = branch_weights_csv(&[("a", 0.25), ("b", 0.75)]);
        assert_eq!(csv, "label,weight\na,2.5e-1\nb,7.5e-1\n");
    }
}
