//! Repeated biased binary branching with and without collapse.
//!
//! Without collapse every branch persists and the branch count doubles at
//! each event, while the lightest branch weight falls as `(1 - bias)^k`.
//! With any collapse policy the set is reduced to one branch after each
//! event.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::{CollapsePolicy, ExperimentConfig};
use super::{MetricsReport, WeightStats, ARTIFACT_VERSION};
use crate::amplitudes::{sparse_collapse, BranchSet};
use crate::error::{Error, Result};
use crate::seeding::derived_rng;
use crate::DENSE_STATE_CAP;

const STREAM_BRANCHING: u64 = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManyWorldsOutcome {
    pub report: MetricsReport,
    /// `(label, |w|^2)` of the final branch set.
    pub final_weights: Vec<(String, f64)>,
    /// Events actually applied; smaller than requested when truncated.
    pub events_applied: usize,
}

/// Applies `cfg.branching_events` binary branchings with weights
/// `(bias, 1 - bias)` under `cfg.policy`.
///
/// The count trace starts with the single initial branch. Branching stops
/// once the next event would exceed 10^6 branches, and the report is flagged
/// as truncated.
pub fn run_many_worlds_comparison(cfg: &ExperimentConfig) -> Result<ManyWorldsOutcome> {
    cfg.validate()?;
    let factors = [
        ("0", Complex64::new(cfg.branching_bias.sqrt(), 0.0)),
        ("1", Complex64::new((1.0 - cfg.branching_bias).sqrt(), 0.0)),
    ];
    let mut rng = derived_rng(cfg.seed, &[STREAM_BRANCHING]);
    let mut set = BranchSet::delta("");
    let mut trace = vec![1u64];
    let mut truncated = false;
    let mut collapse_events = 0u64;
    let mut events_applied = 0;
    for _ in 0..cfg.branching_events {
        if set.len() * factors.len() > DENSE_STATE_CAP {
            truncated = true;
            break;
        }
        set = set.split(&factors)?;
        if cfg.policy != CollapsePolicy::None {
            set = sparse_collapse(&set, &mut rng)?.1;
            collapse_events += 1;
        }
        set.check_norm().map_err(|e| Error::InvariantViolation(e.to_string()))?;
        trace.push(set.len() as u64);
        events_applied += 1;
    }
    let final_weights = set.weights();
    let masses: Vec<f64> = final_weights.iter().map(|(_, w)| *w).collect();
    let report = MetricsReport {
        experiment: "many_worlds".into(),
        policy: cfg.policy,
        seed: cfg.seed,
        learning_score: None,
        disruption_index: None,
        branch_count_trace: trace,
        branch_weight_stats: WeightStats::from_weights(&masses),
        collapse_events,
        truncated,
        config: cfg.clone(),
        version: ARTIFACT_VERSION.into(),
    };
    Ok(ManyWorldsOutcome { report, final_weights, events_applied })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(events: usize, bias: f64, policy: CollapsePolicy) -> ExperimentConfig {
        ExperimentConfig { branching_events: events, branching_bias: bias, policy, ..ExperimentConfig::desk(7) }
    }

    #[test]
    fn one_even_split() {
        let out = run_many_worlds_comparison(&cfg(1, 0.5, CollapsePolicy::None)).unwrap();
        assert_eq!(out.report.branch_count_trace, vec![1, 2]);
        for (_, w) in &out.final_weights {
            assert!((w - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn ten_biased_splits_keep_the_light_branch() {
        let out = run_many_worlds_comparison(&cfg(10, 0.9, CollapsePolicy::None)).unwrap();
        assert_eq!(out.report.branch_count_trace, (0..=10).map(|k| 1u64 << k).collect::<Vec<_>>());
        let min = out.report.branch_weight_stats.min;
        assert!((min - 1e-10).abs() / 1e-10 < 1e-9, "{min}");
        let light = out.final_weights.iter().find(|(l, _)| l == "1111111111").unwrap();
        assert_eq!(light.1, min);
        assert!(!out.report.truncated);
    }

    #[test]
    fn collapse_keeps_one() {
        for p in [CollapsePolicy::BranchLevelAfterSeparation, CollapsePolicy::PerSiteEveryStep] {
            let out = run_many_worlds_comparison(&cfg(10, 0.9, p)).unwrap();
            assert_eq!(out.report.branch_count_trace, vec![1; 11]);
            assert_eq!(out.report.collapse_events, 10);
        }
    }

    #[test]
    fn truncates_instead_of_exploding() {
        let out = run_many_worlds_comparison(&cfg(25, 0.5, CollapsePolicy::None)).unwrap();
        assert!(out.report.truncated);
        assert_eq!(out.events_applied, 19);
        assert_eq!(*out.report.branch_count_trace.last().unwrap(), 1 << 19);
    }
}
