//! Seeded, reproducible experiments on top of the amplitude and schema layers.
//!
//! * [`run_collapse_level_experiment`] compares where collapses are placed
//!   while a schema superposition forms: at every unit on every step, once
//!   at the branch level after the branches have separated, or never.
//! * [`run_many_worlds_comparison`] bookkeeps repeated biased branching with
//!   and without collapse.
//! * [`born_trials`] is the chi-square harness for collapse statistics.
//!
//! Randomness is drawn from streams derived with
//! [`derive_seed`](crate::seeding::derive_seed) from `(seed, stream, trial)`,
//! so trial outcomes do not depend on execution order.

mod born;
mod collapse_level;
mod config;
mod many_worlds;

pub use born::{born_trials, born_trials_against, BornReport, BornSource};
pub use collapse_level::{
    collapse_level_sign_test, run_collapse_level_experiment, run_policy, SeedScores, SignTestSummary,
};
pub use config::{CollapsePolicy, ExperimentConfig, EXPERIMENT_KEYS};
pub use many_worlds::{run_many_worlds_comparison, ManyWorldsOutcome};

use serde::{Deserialize, Serialize};

use crate::stable_sum;

/// Version string embedded in every report.
pub const ARTIFACT_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightStats {
    pub count: u64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl WeightStats {
    pub fn from_weights(weights: &[f64]) -> Self {
        if weights.is_empty() {
            return Self { count: 0, min: 0.0, max: 0.0, mean: 0.0 };
        }
        let min = weights.iter().copied().fold(f64::INFINITY, f64::min);
        let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = stable_sum(weights.iter().copied()) / weights.len() as f64;
        Self { count: weights.len() as u64, min, max, mean }
    }
}

/// Metrics of one experiment run under one collapse policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub experiment: String,
    pub policy: CollapsePolicy,
    pub seed: u64,
    /// Mean fraction of units recalled correctly from held-out corrupted cues.
    pub learning_score: Option<f64>,
    /// Mean per-unit infidelity between the policy's branch states and the
    /// collapse-free development of the same branches.
    pub disruption_index: Option<f64>,
    pub branch_count_trace: Vec<u64>,
    pub branch_weight_stats: WeightStats,
    pub collapse_events: u64,
    pub truncated: bool,
    pub config: ExperimentConfig,
    pub version: String,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn csv_header() -> &'static str {
        "experiment,policy,seed,learning_score,disruption_index,collapse_events,truncated,final_branch_count,min_weight,max_weight,mean_weight\n"
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{:e},{:e},{:e}\n",
            self.experiment,
            self.policy.name(),
            self.seed,
            opt(self.learning_score),
            opt(self.disruption_index),
            self.collapse_events,
            self.truncated,
            self.branch_count_trace.last().copied().unwrap_or(0),
            self.branch_weight_stats.min,
            self.branch_weight_stats.max,
            self.branch_weight_stats.mean,
        )
    }
}
