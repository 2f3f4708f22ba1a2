use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config_state::{LatticeConfig, LATTICE_KEYS};
use crate::error::{Error, Result};
use crate::kvdoc::KvDocument;
use crate::DENSE_STATE_CAP;

/// Where collapse events are placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollapsePolicy {
    /// Every unit is measured after every evolution step.
    PerSiteEveryStep,
    /// One collapse of the whole branch register once branches have separated.
    BranchLevelAfterSeparation,
    /// No collapse.
    None,
}

impl CollapsePolicy {
    pub const ALL: [CollapsePolicy; 3] =
        [CollapsePolicy::PerSiteEveryStep, CollapsePolicy::BranchLevelAfterSeparation, CollapsePolicy::None];

    pub fn name(&self) -> &'static str {
        match self {
            CollapsePolicy::PerSiteEveryStep => "per_site_every_step",
            CollapsePolicy::BranchLevelAfterSeparation => "branch_level_after_separation",
            CollapsePolicy::None => "none",
        }
    }
}

impl fmt::Display for CollapsePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CollapsePolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        CollapsePolicy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown policy `{s}`"))
    }
}

/// Keys accepted in an experiment config document, besides the lattice keys.
pub const EXPERIMENT_KEYS: [&str; 17] = [
    "n_neurons",
    "n_patterns",
    "policy",
    "n_trials",
    "n_steps",
    "separation_threshold",
    "cue_flips",
    "test_flips",
    "n_test_cues",
    "cue_sharpness",
    "learning_rate",
    "facilitation_threshold",
    "recall_sweeps",
    "n_seeds",
    "branching_events",
    "branching_bias",
    "born_samples",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub lattice: LatticeConfig,
    pub n_neurons: usize,
    pub n_patterns: usize,
    pub policy: CollapsePolicy,
    /// Training trials per run.
    pub n_trials: usize,
    /// Evolution steps per trial; also the formation time of a branch.
    pub n_steps: usize,
    pub seed: u64,
    /// Branches count as separated once every pairwise state overlap is below this.
    pub separation_threshold: f64,
    /// Units flipped in each training cue.
    pub cue_flips: usize,
    /// Units flipped in each held-out test cue.
    pub test_flips: usize,
    pub n_test_cues: usize,
    /// Alternative `i` gets weight `exp(cue_sharpness * overlap(cue, pattern_i))`.
    pub cue_sharpness: f64,
    pub learning_rate: f64,
    pub facilitation_threshold: usize,
    pub recall_sweeps: usize,
    /// Seeds used by the sign-test harness.
    pub n_seeds: usize,
    pub branching_events: usize,
    /// Weight of the favoured child in each binary branching.
    pub branching_bias: f64,
    pub born_samples: u64,
}

impl ExperimentConfig {
    /// The desk configuration: 16 neurons, 3 patterns, 200 trials.
    pub fn desk(seed: u64) -> Self {
        Self {
            lattice: LatticeConfig::new(3, 1, 1, 10, 1, 0.0).expect("valid lattice"),
            n_neurons: 16,
            n_patterns: 3,
            policy: CollapsePolicy::BranchLevelAfterSeparation,
            n_trials: 200,
            n_steps: 8,
            seed,
            separation_threshold: 0.5,
            cue_flips: 3,
            test_flips: 2,
            n_test_cues: 100,
            cue_sharpness: 4.0,
            learning_rate: 1.0,
            facilitation_threshold: 1,
            recall_sweeps: 10,
            n_seeds: 40,
            branching_events: 10,
            branching_bias: 0.9,
            born_samples: 100_000,
        }
    }

    pub fn with_policy(&self, policy: CollapsePolicy) -> Self {
        Self { policy, ..self.clone() }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_trials == 0 {
            return bad("n_trials must be at least 1");
        }
        if self.n_neurons == 0 || self.n_patterns == 0 {
            return bad("n_neurons and n_patterns must be positive");
        }
        if self.n_steps == 0 {
            return bad("n_steps must be positive");
        }
        if !(self.separation_threshold > 0.0 && self.separation_threshold <= 1.0) {
            return bad("separation_threshold must lie in (0, 1]");
        }
        if self.cue_flips > self.n_neurons || self.test_flips > self.n_neurons {
            return bad("cue flips cannot exceed n_neurons");
        }
        if !self.cue_sharpness.is_finite() {
            return bad("cue_sharpness must be finite");
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate must be positive");
        }
        if self.facilitation_threshold == 0 || self.recall_sweeps == 0 {
            return bad("facilitation_threshold and recall_sweeps must be positive");
        }
        if self.n_seeds == 0 {
            return bad("n_seeds must be positive");
        }
        if !(self.branching_bias > 0.0 && self.branching_bias < 1.0) {
            return bad("branching_bias must lie in (0, 1)");
        }
        if self.n_neurons >= 2 && self.n_patterns as u128 > (1u128 << self.n_neurons.min(100)) {
            return bad("more patterns than distinct firing vectors");
        }
        // label register times neuron register, as a dense vector
        let dense = (self.n_patterns as u128).checked_mul(1u128.checked_shl(self.n_neurons as u32).unwrap_or(0));
        match dense {
            Some(d) if d > 0 && d <= DENSE_STATE_CAP as u128 => Ok(()),
            _ => Err(Error::ResourceCap {
                description: format!(
                    "{} patterns x 2^{} neuron states exceeds the dense cap of {DENSE_STATE_CAP}",
                    self.n_patterns, self.n_neurons
                ),
            }),
        }
    }

    /// Reads lattice and experiment keys; anything missing takes the desk default.
    pub fn from_document(doc: &KvDocument, seed: u64) -> Result<Self> {
        let known: Vec<&str> = LATTICE_KEYS.iter().chain(EXPERIMENT_KEYS.iter()).copied().collect();
        doc.reject_unknown(&known)?;
        let d = Self::desk(seed);
        let cfg = Self {
            lattice: if doc.contains("n_sites") { LatticeConfig::from_document(doc)? } else { d.lattice.clone() },
            n_neurons: doc.get("n_neurons")?.unwrap_or(d.n_neurons),
            n_patterns: doc.get("n_patterns")?.unwrap_or(d.n_patterns),
            policy: doc.get("policy")?.unwrap_or(d.policy),
            n_trials: doc.get("n_trials")?.unwrap_or(d.n_trials),
            n_steps: doc.get("n_steps")?.unwrap_or(d.n_steps),
            seed,
            separation_threshold: doc.get("separation_threshold")?.unwrap_or(d.separation_threshold),
            cue_flips: doc.get("cue_flips")?.unwrap_or(d.cue_flips),
            test_flips: doc.get("test_flips")?.unwrap_or(d.test_flips),
            n_test_cues: doc.get("n_test_cues")?.unwrap_or(d.n_test_cues),
            cue_sharpness: doc.get("cue_sharpness")?.unwrap_or(d.cue_sharpness),
            learning_rate: doc.get("learning_rate")?.unwrap_or(d.learning_rate),
            facilitation_threshold: doc.get("facilitation_threshold")?.unwrap_or(d.facilitation_threshold),
            recall_sweeps: doc.get("recall_sweeps")?.unwrap_or(d.recall_sweeps),
            n_seeds: doc.get("n_seeds")?.unwrap_or(d.n_seeds),
            branching_events: doc.get("branching_events")?.unwrap_or(d.branching_events),
            branching_bias: doc.get("branching_bias")?.unwrap_or(d.branching_bias),
            born_samples: doc.get("born_samples")?.unwrap_or(d.born_samples),
        };
        match cfg.validate() {
            Ok(()) => Ok(cfg),
            Err(Error::InvalidConfig(message)) => Err(Error::ConfigParse { line: 0, message }),
            Err(other) => Err(other),
        }
    }
}
