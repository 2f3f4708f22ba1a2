//! Lattice system, its reversible classical dynamics, and the exact
//! enumeration of its configuration space.
//!
//! The grid is a 1-D ring of `n_sites` points carrying `n_fields` integer
//! fields, each valued in `{-L..=+L}` with `L = half_range`. The dynamics is
//! second order: a [`DynamicalState`] holds the current and the previous
//! configuration and one step computes
//!
//! ```text
//! next[i, j] = reduce( sum_{i' in ring ball(i, r)} current[i', j] - previous[i, j] )
//! ```
//!
//! where `reduce` maps an integer into `{-L..=+L}` modulo `base = 2L + 1`.
//! The map is a bijection; [`DynamicalState::step_backward`] inverts it.
//!
//! Configurations are numbered by little-endian mixed-radix encoding with
//! digit `value + L`. Slot `k = site * n_fields + field`; a dynamical state
//! places the current slots first and the previous slots after them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kvdoc::KvDocument;
use crate::DENSE_STATE_CAP;

/// Index of one configuration (or one dynamical state) in its mixed-radix numbering.
pub type StateIndex = usize;

/// Keys accepted in the plain-text lattice config document.
pub const LATTICE_KEYS: [&str; 6] =
    ["n_sites", "n_fields", "half_range", "n_timesteps", "neighbor_radius", "phase_rate"];

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawLatticeConfig {
    n_sites: usize,
    n_fields: usize,
    half_range: u64,
    n_timesteps: usize,
    neighbor_radius: usize,
    phase_rate: f64,
}

/// Grid, field, value and temporal parameters of the lattice, plus the
/// dynamics coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLatticeConfig", into = "RawLatticeConfig")]
pub struct LatticeConfig {
    n_sites: usize,
    n_fields: usize,
    half_range: u64,
    n_timesteps: usize,
    neighbor_radius: usize,
    phase_rate: f64,
    base: usize,
    configuration_count: usize,
    dynamical_count: usize,
}

impl TryFrom<RawLatticeConfig> for LatticeConfig {
    type Error = Error;

    fn try_from(raw: RawLatticeConfig) -> Result<Self> {
        LatticeConfig::new(
            raw.n_sites,
            raw.n_fields,
            raw.half_range,
            raw.n_timesteps,
            raw.neighbor_radius,
            raw.phase_rate,
        )
    }
}

impl From<LatticeConfig> for RawLatticeConfig {
    fn from(c: LatticeConfig) -> Self {
        RawLatticeConfig {
            n_sites: c.n_sites,
            n_fields: c.n_fields,
            half_range: c.half_range,
            n_timesteps: c.n_timesteps,
            neighbor_radius: c.neighbor_radius,
            phase_rate: c.phase_rate,
        }
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

/// Writes `base^exp` without evaluating it, for messages about spaces that do not fit.
pub fn describe_power(base: u128, exp: usize) -> String {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        match acc.checked_mul(base) {
            Some(v) => acc = v,
            None => return format!("{base}^{exp} (exceeds 2^128)"),
        }
    }
    format!("{base}^{exp} = {acc}")
}

impl LatticeConfig {
    pub fn new(
        n_sites: usize,
        n_fields: usize,
        half_range: u64,
        n_timesteps: usize,
        neighbor_radius: usize,
        phase_rate: f64,
    ) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidConfig("n_sites must be positive".into()));
        }
        if n_fields == 0 {
            return Err(Error::InvalidConfig("n_fields must be positive".into()));
        }
        if n_timesteps == 0 {
            return Err(Error::InvalidConfig("n_timesteps must be positive".into()));
        }
        if neighbor_radius == 0 {
            return Err(Error::InvalidConfig("neighbor_radius must be positive".into()));
        }
        if !phase_rate.is_finite() {
            return Err(Error::InvalidConfig("phase_rate must be finite".into()));
        }
        let base_wide = 2 * half_range as u128 + 1;
        let slots = n_sites
            .checked_mul(n_fields)
            .ok_or_else(|| Error::ResourceCap { description: "n_sites * n_fields overflows".into() })?;
        let base = usize::try_from(base_wide)
            .ok()
            .filter(|b| i64::try_from(*b).is_ok())
            .ok_or_else(|| Error::ResourceCap { description: describe_power(base_wide, slots) })?;
        let configuration_count = checked_pow(base, slots)
            .ok_or_else(|| Error::ResourceCap { description: describe_power(base_wide, slots) })?;
        let dynamical_count = slots
            .checked_mul(2)
            .and_then(|s2| checked_pow(base, s2))
            .ok_or_else(|| Error::ResourceCap {
                description: format!("dynamical state count {}", describe_power(base_wide, 2 * slots)),
            })?;
        Ok(Self {
            n_sites,
            n_fields,
            half_range,
            n_timesteps,
            neighbor_radius,
            phase_rate,
            base,
            configuration_count,
            dynamical_count,
        })
    }

    /// Config with one timestep, radius 1 and no phase advance.
    pub fn small(n_sites: usize, n_fields: usize, half_range: u64) -> Result<Self> {
        Self::new(n_sites, n_fields, half_range, 1, 1, 0.0)
    }

    pub fn with_phase_rate(&self, phase_rate: f64) -> Result<Self> {
        Self::new(
            self.n_sites,
            self.n_fields,
            self.half_range,
            self.n_timesteps,
            self.neighbor_radius,
            phase_rate,
        )
    }

    pub fn with_neighbor_radius(&self, neighbor_radius: usize) -> Result<Self> {
        Self::new(
            self.n_sites,
            self.n_fields,
            self.half_range,
            self.n_timesteps,
            neighbor_radius,
            self.phase_rate,
        )
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_fields(&self) -> usize {
        self.n_fields
    }

    pub fn half_range(&self) -> u64 {
        self.half_range
    }

    pub fn n_timesteps(&self) -> usize {
        self.n_timesteps
    }

    pub fn neighbor_radius(&self) -> usize {
        self.neighbor_radius
    }

    pub fn phase_rate(&self) -> f64 {
        self.phase_rate
    }

    /// Number of distinct values a field can take, `2L + 1`.
    pub fn base(&self) -> usize {
        self.base
    }

    /// Number of field slots in one configuration, `n_fields * n_sites`.
    pub fn slots(&self) -> usize {
        self.n_sites * self.n_fields
    }

    /// Number of single-time configurations, `base^(n_fields * n_sites)`.
    pub fn configuration_count(&self) -> usize {
        self.configuration_count
    }

    /// Number of (current, previous) pairs, `base^(2 * n_fields * n_sites)`.
    pub fn dynamical_state_count(&self) -> usize {
        self.dynamical_count
    }

    /// Size of the dynamical space, or `ResourceCap` when it exceeds the dense cap.
    pub fn dense_space_size(&self) -> Result<usize> {
        if self.dynamical_count > DENSE_STATE_CAP {
            return Err(Error::ResourceCap {
                description: format!(
                    "dynamical space {} exceeds the dense cap of {DENSE_STATE_CAP}",
                    describe_power(self.base as u128, 2 * self.slots())
                ),
            });
        }
        Ok(self.dynamical_count)
    }

    pub fn register_accounting(&self) -> RegisterReport {
        RegisterReport {
            classical_registers: self.slots() as u128,
            classical_register_capacity: self.base as u128,
            statistical_registers: self.configuration_count as u128,
            quantum_registers: 2 * self.configuration_count as u128,
        }
    }

    /// Distinct ring sites within `neighbor_radius` of `site`, ascending, `site` included.
    pub fn neighbors(&self, site: usize) -> Vec<usize> {
        let n = self.n_sites;
        if 2 * self.neighbor_radius + 1 >= n {
            return (0..n).collect();
        }
        let mut out: Vec<usize> = (0..=2 * self.neighbor_radius)
            .map(|d| (site + n - self.neighbor_radius + d) % n)
            .collect();
        out.sort_unstable();
        out
    }

    /// Maps an integer into `{-L..=+L}` modulo `base`.
    pub fn reduce(&self, value: i128) -> i64 {
        let l = self.half_range as i128;
        ((value + l).rem_euclid(self.base as i128) - l) as i64
    }

    pub fn contains_value(&self, value: i64) -> bool {
        value.unsigned_abs() <= self.half_range
    }

    pub fn from_document(doc: &KvDocument) -> Result<Self> {
        let cfg = Self::new(
            doc.require("n_sites")?,
            doc.require("n_fields")?,
            doc.require("half_range")?,
            doc.get("n_timesteps")?.unwrap_or(1),
            doc.get("neighbor_radius")?.unwrap_or(1),
            doc.get("phase_rate")?.unwrap_or(0.0),
        );
        cfg.map_err(|e| match e {
            Error::InvalidConfig(message) => Error::ConfigParse { line: 0, message },
            other => other,
        })
    }

    /// Parses a document that may contain only lattice keys.
    pub fn parse(text: &str) -> Result<Self> {
        let doc = KvDocument::parse(text)?;
        doc.reject_unknown(&LATTICE_KEYS)?;
        Self::from_document(&doc)
    }

    pub fn to_document_string(&self) -> String {
        format!(
            "n_sites = {}\nn_fields = {}\nhalf_range = {}\nn_timesteps = {}\nneighbor_radius = {}\nphase_rate = {:?}\n",
            self.n_sites, self.n_fields, self.half_range, self.n_timesteps, self.neighbor_radius, self.phase_rate
        )
    }
}

/// Register counts for the three descriptions of one time slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterReport {
    pub classical_registers: u128,
    pub classical_register_capacity: u128,
    pub statistical_registers: u128,
    pub quantum_registers: u128,
}

pub fn configuration_count(cfg: &LatticeConfig) -> usize {
    cfg.configuration_count()
}

pub fn register_accounting(cfg: &LatticeConfig) -> RegisterReport {
    cfg.register_accounting()
}

/// Field values of every (site, field) slot at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfiguration {
    cfg: LatticeConfig,
    values: Vec<i64>,
}

impl FieldConfiguration {
    pub fn new(cfg: &LatticeConfig, values: Vec<i64>) -> Result<Self> {
        if values.len() != cfg.slots() {
            return Err(Error::DimensionMismatch { expected: cfg.slots(), actual: values.len() });
        }
        if let Some(bad) = values.iter().find(|v| !cfg.contains_value(**v)) {
            return Err(Error::InvalidConfig(format!(
                "field value {bad} outside [-{0}, {0}]",
                cfg.half_range
            )));
        }
        Ok(Self { cfg: cfg.clone(), values })
    }

    pub fn zeros(cfg: &LatticeConfig) -> Self {
        Self { cfg: cfg.clone(), values: vec![0; cfg.slots()] }
    }

    pub fn config(&self) -> &LatticeConfig {
        &self.cfg
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn get(&self, site: usize, field: usize) -> i64 {
        self.values[site * self.cfg.n_fields + field]
    }

    pub fn with_value(mut self, site: usize, field: usize, value: i64) -> Result<Self> {
        if site >= self.cfg.n_sites || field >= self.cfg.n_fields {
            return Err(Error::IndexOutOfRange { index: site * self.cfg.n_fields + field, size: self.cfg.slots() });
        }
        if !self.cfg.contains_value(value) {
            return Err(Error::InvalidConfig(format!("field value {value} outside range")));
        }
        self.values[site * self.cfg.n_fields + field] = value;
        Ok(self)
    }

    pub fn encode(&self) -> StateIndex {
        encode_digits(&self.cfg, &self.values, 0)
    }

    pub fn decode(m: StateIndex, cfg: &LatticeConfig) -> Result<Self> {
        if m >= cfg.configuration_count {
            return Err(Error::IndexOutOfRange { index: m, size: cfg.configuration_count });
        }
        Ok(Self { cfg: cfg.clone(), values: decode_digits(cfg, m, cfg.slots()) })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.values).expect("integer array serializes")
    }

    pub fn from_json(text: &str, cfg: &LatticeConfig) -> Result<Self> {
        let values: Vec<i64> =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("field JSON: {e}")))?;
        Self::new(cfg, values)
    }
}

impl fmt::Display for FieldConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.values)
    }
}

fn encode_digits(cfg: &LatticeConfig, values: &[i64], mut acc: usize) -> StateIndex {
    // Horner from the most significant slot.
    let l = cfg.half_range as i64;
    for v in values.iter().rev() {
        acc = acc * cfg.base + (v + l) as usize;
    }
    acc
}

fn decode_digits(cfg: &LatticeConfig, mut m: usize, n: usize) -> Vec<i64> {
    let l = cfg.half_range as i64;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push((m % cfg.base) as i64 - l);
        m /= cfg.base;
    }
    out
}

/// A (current, previous) pair: the unit evolved by the classical step.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicalState {
    pub current: FieldConfiguration,
    pub previous: FieldConfiguration,
}

impl DynamicalState {
    pub fn new(current: FieldConfiguration, previous: FieldConfiguration) -> Result<Self> {
        if current.cfg != previous.cfg {
            return Err(Error::InvalidConfig("current and previous use different lattice configs".into()));
        }
        Ok(Self { current, previous })
    }

    pub fn zeros(cfg: &LatticeConfig) -> Self {
        Self { current: FieldConfiguration::zeros(cfg), previous: FieldConfiguration::zeros(cfg) }
    }

    /// Everything zero except `current[site, field] = value`.
    pub fn excitation(cfg: &LatticeConfig, site: usize, field: usize, value: i64) -> Result<Self> {
        Ok(Self {
            current: FieldConfiguration::zeros(cfg).with_value(site, field, value)?,
            previous: FieldConfiguration::zeros(cfg),
        })
    }

    pub fn config(&self) -> &LatticeConfig {
        &self.current.cfg
    }

    pub fn encode(&self) -> StateIndex {
        let cfg = &self.current.cfg;
        // previous occupies the high-order digits
        let high = encode_digits(cfg, &self.previous.values, 0);
        encode_digits(cfg, &self.current.values, high)
    }

    pub fn decode(m: StateIndex, cfg: &LatticeConfig) -> Result<Self> {
        if m >= cfg.dynamical_count {
            return Err(Error::IndexOutOfRange { index: m, size: cfg.dynamical_count });
        }
        let digits = decode_digits(cfg, m, 2 * cfg.slots());
        let (cur, prev) = digits.split_at(cfg.slots());
        Ok(Self {
            current: FieldConfiguration { cfg: cfg.clone(), values: cur.to_vec() },
            previous: FieldConfiguration { cfg: cfg.clone(), values: prev.to_vec() },
        })
    }

    fn neighbor_sums(&self) -> Vec<i128> {
        let cfg = &self.current.cfg;
        let mut sums = vec![0i128; cfg.slots()];
        for site in 0..cfg.n_sites {
            for nb in cfg.neighbors(site) {
                for field in 0..cfg.n_fields {
                    sums[site * cfg.n_fields + field] += self.current.get(nb, field) as i128;
                }
            }
        }
        sums
    }

    /// One forward step of the reversible rule.
    pub fn step_classical(&self) -> Self {
        let cfg = &self.current.cfg;
        let sums = self.neighbor_sums();
        let next: Vec<i64> = sums
            .iter()
            .zip(&self.previous.values)
            .map(|(s, p)| cfg.reduce(s - *p as i128))
            .collect();
        Self {
            current: FieldConfiguration { cfg: cfg.clone(), values: next },
            previous: self.current.clone(),
        }
    }

    /// Exact inverse of [`step_classical`](Self::step_classical):
    /// the older configuration is `sum of neighbors(previous) - current`.
    pub fn step_backward(&self) -> Self {
        let cfg = &self.current.cfg;
        let swapped = Self { current: self.previous.clone(), previous: self.current.clone() };
        let sums = swapped.neighbor_sums();
        let older: Vec<i64> = sums
            .iter()
            .zip(&self.current.values)
            .map(|(s, c)| cfg.reduce(s - *c as i128))
            .collect();
        Self {
            current: self.previous.clone(),
            previous: FieldConfiguration { cfg: cfg.clone(), values: older },
        }
    }
}

pub fn step_classical(state: &DynamicalState) -> DynamicalState {
    state.step_classical()
}

pub fn step_backward(state: &DynamicalState) -> DynamicalState {
    state.step_backward()
}

/// `trajectory[0] = initial`, `trajectory[k + 1] = step_classical(trajectory[k])`.
pub fn evolve_classical(initial: &DynamicalState, steps: usize) -> Vec<DynamicalState> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(initial.clone());
    for k in 0..steps {
        let next = out[k].step_classical();
        out.push(next);
    }
    out
}

/// Successor index of every dynamical state, i.e. the classical step as a
/// permutation of `0..dynamical_state_count`.
pub fn successor_table(cfg: &LatticeConfig) -> Result<Vec<StateIndex>> {
    let size = cfg.dense_space_size()?;
    (0..size)
        .map(|m| DynamicalState::decode(m, cfg).map(|s| s.step_classical().encode()))
        .collect()
}

/// Predecessor index of every dynamical state (inverse of [`successor_table`]).
pub fn predecessor_table(cfg: &LatticeConfig) -> Result<Vec<StateIndex>> {
    let size = cfg.dense_space_size()?;
    (0..size)
        .map(|m| DynamicalState::decode(m, cfg).map(|s| s.step_backward().encode()))
        .collect()
}
