//! Pattern memory for body-world-belief schemas.
//!
//! A [`Pattern`] is a ±1 firing vector split into labelled segments. A
//! [`SchemaMemory`] is a symmetric, zero-diagonal Hebbian weight matrix:
//! facilitation adds `η p pᵀ` once a pattern has persisted for at least `τ`
//! steps, and recall runs deterministic asynchronous updates in ascending
//! unit order with `sign(0) = +1`.

use std::fmt;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::amplitudes::{sparse_collapse, BranchSet};
use crate::error::{Error, Result};
use crate::stable_sum;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Body,
    World,
    Belief,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub start: usize,
    pub len: usize,
}

impl Segment {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

/// A ±1 firing pattern with segments that partition its units.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    units: Vec<i8>,
    segments: Vec<Segment>,
}

impl Pattern {
    pub fn new(units: Vec<i8>, mut segments: Vec<Segment>) -> Result<Self> {
        if units.is_empty() {
            return Err(Error::InvalidPattern("no units".into()));
        }
        if units.iter().any(|u| *u != 1 && *u != -1) {
            return Err(Error::InvalidPattern("units must be +1 or -1".into()));
        }
        segments.sort_by_key(|s| s.start);
        let mut next = 0;
        for s in &segments {
            if s.len == 0 || s.start != next {
                return Err(Error::InvalidPattern("segments must be non-empty, disjoint and contiguous".into()));
            }
            next = s.start + s.len;
        }
        if next != units.len() {
            return Err(Error::InvalidPattern(format!("segments cover {next} of {} units", units.len())));
        }
        Ok(Self { units, segments })
    }

    /// A pattern with a single world segment.
    pub fn from_units(units: Vec<i8>) -> Result<Self> {
        let len = units.len();
        Self::new(units, vec![Segment { kind: SegmentKind::World, start: 0, len }])
    }

    /// Concatenates labelled parts into one segmented pattern.
    pub fn concat(parts: &[(SegmentKind, &[i8])]) -> Result<Self> {
        let mut units = Vec::new();
        let mut segments = Vec::new();
        for (kind, part) in parts {
            segments.push(Segment { kind: *kind, start: units.len(), len: part.len() });
            units.extend_from_slice(part);
        }
        Self::new(units, segments)
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        Self::from_units((0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
    }

    /// Parses a label written by [`Pattern::id`].
    pub fn from_id(label: &str) -> Result<Self> {
        let units = label
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(Error::InvalidPattern(format!("bad unit symbol {other:?}"))),
            })
            .collect::<Result<Vec<i8>>>()?;
        Self::from_units(units)
    }

    /// `+`/`-` string of the units; distinct patterns have distinct ids.
    pub fn id(&self) -> String {
        self.units.iter().map(|u| if *u > 0 { '+' } else { '-' }).collect()
    }

    pub fn units(&self) -> &[i8] {
        &self.units
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Same segments, new units.
    pub fn with_units(&self, units: Vec<i8>) -> Result<Self> {
        Self::new(units, self.segments.clone())
    }

    pub fn flipped(&self, unit: usize) -> Self {
        let mut out = self.clone();
        out.units[unit] = -out.units[unit];
        out
    }

    /// Copy with `k` distinct randomly chosen units flipped.
    pub fn with_random_flips<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Self {
        let mut out = self.clone();
        for i in sample_indices(rng, self.len(), k.min(self.len())) {
            out.units[i] = -out.units[i];
        }
        out
    }

    /// Normalized dot product, in `[-1, 1]`.
    pub fn overlap(&self, other: &Pattern) -> f64 {
        let dot: i64 = self.units.iter().zip(&other.units).map(|(a, b)| (*a as i64) * (*b as i64)).sum();
        dot as f64 / self.len() as f64
    }

    /// Number of units that agree.
    pub fn agreement(&self, other: &Pattern) -> usize {
        self.units.iter().zip(&other.units).filter(|(a, b)| a == b).count()
    }

    pub fn restrict(&self, segment: &Segment) -> Result<Pattern> {
        Pattern::new(
            self.units[segment.range()].to_vec(),
            vec![Segment { kind: segment.kind, start: 0, len: segment.len }],
        )
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Symmetric zero-diagonal Hebbian memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaMemory {
    n_neurons: usize,
    weights: Vec<f64>,
    learning_rate: f64,
    facilitation_threshold: usize,
}

/// One asynchronous unit update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecallEvent {
    pub sweep: usize,
    pub unit: usize,
    pub flipped: bool,
    /// Energy after the update.
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallOutcome {
    pub pattern: Pattern,
    pub converged: bool,
    pub sweeps: usize,
    pub initial_energy: f64,
    pub trace: Vec<RecallEvent>,
}

impl RecallOutcome {
    /// `sweep,unit,flipped,energy` CSV with a header row.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("sweep,unit,flipped,energy\n");
        for e in &self.trace {
            out.push_str(&format!("{},{},{},{:?}\n", e.sweep, e.unit, e.flipped as u8, e.energy));
        }
        out
    }
}

impl SchemaMemory {
    pub fn new(n_neurons: usize, learning_rate: f64, facilitation_threshold: usize) -> Result<Self> {
        if n_neurons == 0 {
            return Err(Error::InvalidConfig("n_neurons must be positive".into()));
        }
        if !(learning_rate > 0.0) || !learning_rate.is_finite() {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if facilitation_threshold == 0 {
            return Err(Error::InvalidConfig("facilitation_threshold must be positive".into()));
        }
        Ok(Self { n_neurons, weights: vec![0.0; n_neurons * n_neurons], learning_rate, facilitation_threshold })
    }

    pub fn n_neurons(&self) -> usize {
        self.n_neurons
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn facilitation_threshold(&self) -> usize {
        self.facilitation_threshold
    }

    pub fn weight(&self, a: usize, b: usize) -> f64 {
        self.weights[a * self.n_neurons + b]
    }

    pub fn is_symmetric_zero_diagonal(&self) -> bool {
        let n = self.n_neurons;
        (0..n).all(|a| self.weight(a, a) == 0.0 && (0..a).all(|b| self.weight(a, b) == self.weight(b, a)))
    }

    fn check_dim(&self, p: &Pattern) -> Result<()> {
        if p.len() != self.n_neurons {
            return Err(Error::DimensionMismatch { expected: self.n_neurons, actual: p.len() });
        }
        Ok(())
    }

    /// Adds `η p pᵀ` (diagonal kept at zero) when `duration >= τ`.
    pub fn facilitate(&self, p: &Pattern, duration: usize) -> Result<Self> {
        self.facilitate_scaled(p, duration, 1.0)
    }

    /// As [`facilitate`](Self::facilitate) with the increment scaled by `scale`.
    pub fn facilitate_scaled(&self, p: &Pattern, duration: usize, scale: f64) -> Result<Self> {
        self.check_dim(p)?;
        let mut out = self.clone();
        if duration < self.facilitation_threshold {
            return Ok(out);
        }
        let rate = self.learning_rate * scale;
        let n = self.n_neurons;
        for a in 0..n {
            for b in (a + 1)..n {
                let dw = rate * (p.units[a] as f64) * (p.units[b] as f64);
                out.weights[a * n + b] += dw;
                out.weights[b * n + a] += dw;
            }
        }
        Ok(out)
    }

    pub fn local_field(&self, units: &[i8], a: usize) -> f64 {
        let row = &self.weights[a * self.n_neurons..(a + 1) * self.n_neurons];
        row.iter().zip(units).map(|(w, u)| w * (*u as f64)).sum()
    }

    /// `-1/2 uᵀ W u`.
    pub fn energy(&self, units: &[i8]) -> f64 {
        let n = self.n_neurons;
        let mut terms = Vec::with_capacity(n);
        for a in 0..n {
            terms.push(-0.5 * (units[a] as f64) * self.local_field(units, a));
        }
        stable_sum(terms)
    }

    /// True when one full sweep changes nothing.
    pub fn is_fixed_point(&self, p: &Pattern) -> bool {
        p.len() == self.n_neurons
            && (0..self.n_neurons).all(|a| {
                let s = if self.local_field(&p.units, a) >= 0.0 { 1 } else { -1 };
                s == p.units[a]
            })
    }

    fn sub_memory(&self, range: std::ops::Range<usize>) -> Self {
        let k = range.len();
        let mut weights = vec![0.0; k * k];
        for (i, a) in range.clone().enumerate() {
            for (j, b) in range.clone().enumerate() {
                weights[i * k + j] = self.weight(a, b);
            }
        }
        Self { n_neurons: k, weights, ..self.clone() }
    }
}

pub fn facilitate(mem: &SchemaMemory, p: &Pattern, duration: usize) -> Result<SchemaMemory> {
    mem.facilitate(p, duration)
}

/// Asynchronous recall from `cue` for at most `max_sweeps` sweeps.
pub fn recall(mem: &SchemaMemory, cue: &Pattern, max_sweeps: usize) -> Result<RecallOutcome> {
    mem.check_dim(cue)?;
    if max_sweeps == 0 {
        return Err(Error::InvalidConfig("max_sweeps must be at least 1".into()));
    }
    let mut units = cue.units.clone();
    let initial_energy = mem.energy(&units);
    let mut energy = initial_energy;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    for sweep in 1..=max_sweeps {
        sweeps = sweep;
        let mut flips = 0;
        for a in 0..mem.n_neurons {
            let h = mem.local_field(&units, a);
            let new = if h >= 0.0 { 1 } else { -1 };
            let flipped = new != units[a];
            if flipped {
                // zero diagonal: E changes by -(new - old) * h
                energy -= (new - units[a]) as f64 * h;
                units[a] = new;
                flips += 1;
            }
            trace.push(RecallEvent { sweep, unit: a, flipped, energy });
        }
        if flips == 0 {
            converged = true;
            break;
        }
    }
    Ok(RecallOutcome { pattern: cue.with_units(units)?, converged, sweeps, initial_energy, trace })
}

/// Evidence for the three record properties of a stored pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordReport {
    /// Fixed point, and every single-unit flip recalls back to it.
    pub endures: bool,
    /// Writing the pattern into a second, disjoint block of a doubled memory
    /// leaves the original weights intact and both copies jointly fixed.
    pub copiable: bool,
    /// The pattern has at least two segments, is a fixed point as a whole, and
    /// each segment is a fixed point of the memory restricted to it.
    pub combinable: bool,
    pub fixed_point: bool,
    pub one_flip_trials: usize,
    pub one_flip_recoveries: usize,
    pub segments_checked: usize,
}

pub fn record_check(mem: &SchemaMemory, p: &Pattern) -> Result<RecordReport> {
    mem.check_dim(p)?;
    let n = mem.n_neurons;
    let fixed_point = mem.is_fixed_point(p);

    let mut recoveries = 0;
    for a in 0..n {
        let out = recall(mem, &p.flipped(a), n.max(1))?;
        if out.pattern.units == p.units {
            recoveries += 1;
        }
    }
    let endures = fixed_point && recoveries == n;

    // copy into a doubled memory: original block, then a fresh block written with p
    let mut doubled = SchemaMemory::new(2 * n, mem.learning_rate, mem.facilitation_threshold)?;
    for a in 0..n {
        for b in 0..n {
            doubled.weights[a * 2 * n + b] = mem.weight(a, b);
        }
    }
    for a in 0..n {
        for b in 0..n {
            if a != b {
                doubled.weights[(n + a) * 2 * n + (n + b)] =
                    mem.learning_rate * (p.units[a] as f64) * (p.units[b] as f64);
            }
        }
    }
    let original_intact = (0..n).all(|a| (0..n).all(|b| doubled.weight(a, b) == mem.weight(a, b)));
    let mut twin = p.units.clone();
    twin.extend_from_slice(&p.units);
    let twin = Pattern::from_units(twin)?;
    let copiable = original_intact && doubled.is_fixed_point(&twin);

    let segments_checked = p.segments.len();
    let combinable = segments_checked >= 2
        && fixed_point
        && p.segments.iter().all(|s| {
            let sub = mem.sub_memory(s.range());
            p.restrict(s).map(|q| sub.is_fixed_point(&q)).unwrap_or(false)
        });

    Ok(RecordReport {
        endures,
        copiable,
        combinable,
        fixed_point,
        one_flip_trials: n,
        one_flip_recoveries: recoveries,
        segments_checked,
    })
}

/// Superposition of alternative patterns with amplitudes `sqrt(w / Σw)` and zero phase.
pub fn form_branches(alternatives: &[(Pattern, f64)]) -> Result<BranchSet> {
    if alternatives.is_empty() {
        return Err(Error::EmptyBranchSet);
    }
    if alternatives.iter().any(|(_, w)| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidDistribution("branch weights must be finite and non-negative".into()));
    }
    let total = stable_sum(alternatives.iter().map(|(_, w)| *w));
    if !(total > 0.0) {
        return Err(Error::ZeroWeight);
    }
    BranchSet::from_weights(alternatives.iter().map(|(p, w)| (p.id(), Complex64::new((w / total).sqrt(), 0.0))))
}

/// Collapses `b` to one branch and facilitates its pattern for `τ` steps.
pub fn actualize<R: Rng + ?Sized>(b: &BranchSet, mem: &SchemaMemory, rng: &mut R) -> Result<(Pattern, SchemaMemory)> {
    let (label, _) = sparse_collapse(b, rng)?;
    let pattern = Pattern::from_id(&label)?;
    let mem = mem.facilitate(&pattern, mem.facilitation_threshold)?;
    Ok((pattern, mem))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;

    fn pat(units: &[i8]) -> Pattern {
        Pattern::from_units(units.to_vec()).unwrap()
    }

    #[test]
    fn pattern_validation() {
        assert!(Pattern::from_units(vec![]).is_err());
        assert!(Pattern::from_units(vec![1, 0]).is_err());
        let seg = |start, len| Segment { kind: SegmentKind::Body, start, len };
        assert!(Pattern::new(vec![1, 1, 1], vec![seg(0, 2)]).is_err());
        assert!(Pattern::new(vec![1, 1, 1], vec![seg(0, 2), seg(1, 2)]).is_err());
        assert!(Pattern::new(vec![1, 1, 1], vec![seg(2, 1), seg(0, 2)]).is_ok());
        let p = Pattern::concat(&[(SegmentKind::Body, &[1, -1]), (SegmentKind::World, &[1]), (SegmentKind::Belief, &[-1])])
            .unwrap();
        assert_eq!(p.segments().len(), 3);
        assert_eq!(p.id(), "+-+-");
        assert_eq!(Pattern::from_id("+-+-").unwrap().units(), p.units());
        assert!(Pattern::from_id("+x").is_err());
    }

    #[test]
    fn hebbian_outer_product() {
        let p = pat(&[1, -1, 1, 1]);
        let m = SchemaMemory::new(4, 1.0, 1).unwrap().facilitate(&p, 1).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let expect = if a == b { 0.0 } else { (p.units()[a] * p.units()[b]) as f64 };
                assert_eq!(m.weight(a, b), expect);
            }
        }
        assert!(m.is_symmetric_zero_diagonal());
    }

    #[test]
    fn duration_gate() {
        let p = pat(&[1, -1, 1, 1]);
        let m0 = SchemaMemory::new(4, 1.0, 1).unwrap();
        assert_eq!(m0.facilitate(&p, 0).unwrap(), m0);
        let m3 = SchemaMemory::new(4, 1.0, 3).unwrap();
        assert_eq!(m3.facilitate(&p, 2).unwrap(), m3);
        assert_ne!(m3.facilitate(&p, 3).unwrap(), m3);
        assert!(m0.facilitate(&pat(&[1, 1]), 1).is_err());
    }

    #[test]
    fn stored_pattern_is_fixed_point() {
        let p = pat(&[1, -1, -1, 1, 1, 1, -1, 1]);
        let m = SchemaMemory::new(8, 1.0, 1).unwrap().facilitate(&p, 1).unwrap();
        let out = recall(&m, &p, 5).unwrap();
        assert!(out.converged);
        assert_eq!(out.sweeps, 1);
        assert_eq!(out.pattern, p);
        assert!(out.trace.iter().all(|e| !e.flipped));
    }

    #[test]
    fn recall_needs_a_sweep() {
        let m = SchemaMemory::new(2, 1.0, 1).unwrap();
        assert!(recall(&m, &pat(&[1, 1]), 0).is_err());
    }

    #[test]
    fn incremental_energy_matches_direct() {
        let mut rng = rng_from_seed(5);
        let a = Pattern::random(12, &mut rng).unwrap();
        let b = Pattern::random(12, &mut rng).unwrap();
        let m = SchemaMemory::new(12, 0.5, 1).unwrap().facilitate(&a, 1).unwrap().facilitate(&b, 1).unwrap();
        let cue = a.with_random_flips(4, &mut rng);
        let out = recall(&m, &cue, 10).unwrap();
        let mut units = cue.units().to_vec();
        for e in &out.trace {
            if e.flipped {
                units[e.unit] = -units[e.unit];
            }
            assert!((m.energy(&units) - e.energy).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_memory_does_not_endure() {
        let p = pat(&[1, -1, 1, -1, 1, -1, 1, -1]);
        let m = SchemaMemory::new(8, 1.0, 1).unwrap();
        let r = record_check(&m, &p).unwrap();
        assert!(!r.endures);
        assert!(!r.fixed_point);
    }

    #[test]
    fn jointly_stored_pattern_is_not_combinable_without_segments() {
        let p = pat(&[1, -1, 1, 1, -1, -1, 1, -1]);
        let m = SchemaMemory::new(8, 1.0, 1).unwrap().facilitate(&p, 1).unwrap();
        let r = record_check(&m, &p).unwrap();
        assert!(r.endures && r.copiable);
        assert!(!r.combinable);
    }

    #[test]
    fn form_branches_examples() {
        let a = pat(&[1, 1]);
        let b = pat(&[1, -1]);
        let one = form_branches(&[(a.clone(), 2.0)]).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.branches()[0].weight, Complex64::new(1.0, 0.0));
        let two = form_branches(&[(a.clone(), 1.0), (b.clone(), 1.0)]).unwrap();
        for br in two.branches() {
            assert!((br.weight.re - 0.5f64.sqrt()).abs() < 1e-15);
        }
        let w = form_branches(&[(a.clone(), 1.0), (b.clone(), 3.0)]).unwrap().weights();
        assert!((w[0].1 - 0.25).abs() < 1e-15 && (w[1].1 - 0.75).abs() < 1e-15);
        assert_eq!(form_branches(&[]), Err(Error::EmptyBranchSet));
        assert_eq!(form_branches(&[(a.clone(), 0.0)]), Err(Error::ZeroWeight));
        assert!(form_branches(&[(a.clone(), -1.0)]).is_err());
        assert!(matches!(form_branches(&[(a.clone(), 1.0), (a, 1.0)]), Err(Error::DuplicateLabel(_))));
    }

    #[test]
    fn actualize_single_branch() {
        let p = pat(&[1, -1, 1, 1, -1, 1]);
        let b = form_branches(&[(p.clone(), 1.0)]).unwrap();
        let m = SchemaMemory::new(6, 1.0, 1).unwrap();
        let (chosen, m2) = actualize(&b, &m, &mut rng_from_seed(0)).unwrap();
        assert_eq!(chosen.units(), p.units());
        assert_eq!(m2, m.facilitate(&p, 1).unwrap());
    }

    #[test]
    fn trace_csv_header() {
        let p = pat(&[1, -1]);
        let m = SchemaMemory::new(2, 1.0, 1).unwrap().facilitate(&p, 1).unwrap();
        let csv = recall(&m, &p, 1).unwrap().trace_csv();
        assert!(csv.starts_with("sweep,unit,flipped,energy\n1,0,0,"));
    }
}
