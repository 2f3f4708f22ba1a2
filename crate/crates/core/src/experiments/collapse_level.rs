//! Collapse-placement experiment.
//!
//! Each training trial presents a corrupted cue of one environment pattern.
//! The schema state becomes a superposition over all environment patterns
//! (weights driven by cue overlap), entangled with a branch label. Within
//! branch `i` every unit whose cue value differs from pattern `i` rotates
//! coherently from the cue value to the target value in `n_steps` equal
//! angles of `π / (2 n_steps)`; other units stay put. The state is kept
//! exactly as `Σ_i β_i |i⟩ ⊗ (⊗_a |φ_ia⟩)`.
//!
//! * `per_site_every_step` measures every unit after every step (Lüders
//!   projection of the joint state), so rotations restart from basis states.
//! * `branch_level_after_separation` collapses the label register once all
//!   pairwise branch overlaps `Π_a |⟨φ_ia|φ_ja⟩|` drop below the separation
//!   threshold (or at the last step); the surviving branch keeps developing.
//! * `none` never collapses.
//!
//! At the end of a trial the actualized pattern is facilitated into the
//! memory. Without collapse every branch's pattern is facilitated with its
//! squared weight as the scale. Learning is scored by recall from held-out
//! corrupted cues after all trials.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{CollapsePolicy, ExperimentConfig};
use super::{MetricsReport, WeightStats, ARTIFACT_VERSION};
use crate::amplitudes::{sparse_collapse, Branch, BranchSet};
use crate::error::{Error, Result};
use crate::schema::{form_branches, recall, Pattern, SchemaMemory};
use crate::seeding::{derive_seed, derived_rng, SimRng};
use crate::stats::{sample_index, sign_test, SignTest};
use crate::{stable_sum, NORM_TOLERANCE};

const STREAM_PROTOTYPES: u64 = 1;
const STREAM_ENVIRONMENT: u64 = 2;
const STREAM_COLLAPSE: u64 = 3;
const STREAM_TEST: u64 = 4;
const STREAM_SEEDS: u64 = 5;

/// Amplitudes of one unit on the basis `(-1, +1)`.
type Qubit = [Complex64; 2];

fn slot(v: i8) -> usize {
    usize::from(v > 0)
}

fn basis(v: i8) -> Qubit {
    let mut q = [Complex64::new(0.0, 0.0); 2];
    q[slot(v)] = Complex64::new(1.0, 0.0);
    q
}

fn inner(a: &Qubit, b: &Qubit) -> Complex64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

struct FormingBranch {
    label: String,
    target: Pattern,
    amplitude: Complex64,
    units: Vec<Qubit>,
    rotating: Vec<bool>,
    infidelity: f64,
}

struct TrialOutcome {
    memory: SchemaMemory,
    disruption: f64,
    counts: Vec<u64>,
    final_weights: Vec<f64>,
    collapse_events: u64,
}

fn environment_patterns(cfg: &ExperimentConfig) -> Result<Vec<Pattern>> {
    let mut rng = derived_rng(cfg.seed, &[STREAM_PROTOTYPES]);
    let mut out: Vec<Pattern> = Vec::with_capacity(cfg.n_patterns);
    while out.len() < cfg.n_patterns {
        let p = Pattern::random(cfg.n_neurons, &mut rng)?;
        if out.iter().all(|q| q.units() != p.units()) {
            out.push(p);
        }
    }
    Ok(out)
}

fn branch_set(branches: &[FormingBranch]) -> Result<BranchSet> {
    BranchSet::new(
        branches
            .iter()
            .map(|b| Branch { label: b.label.clone(), weight: b.amplitude, parent: None })
            .collect(),
    )
}

fn separated(branches: &[FormingBranch], threshold: f64) -> bool {
    for (i, a) in branches.iter().enumerate() {
        for b in &branches[i + 1..] {
            let overlap: f64 = a.units.iter().zip(&b.units).map(|(x, y)| inner(x, y).norm()).product();
            if overlap >= threshold {
                return false;
            }
        }
    }
    true
}

fn renormalize(branches: &mut Vec<FormingBranch>) -> Result<()> {
    branches.retain(|b| b.amplitude.norm_sqr() > 0.0);
    let total = stable_sum(branches.iter().map(|b| b.amplitude.norm_sqr()));
    if !(total > 0.0) {
        return Err(Error::ZeroWeight);
    }
    let scale = total.sqrt();
    for b in branches.iter_mut() {
        b.amplitude /= scale;
    }
    Ok(())
}

/// Lüders measurement of one unit on the joint label-and-units state.
fn measure_unit(branches: &mut Vec<FormingBranch>, unit: usize, rng: &mut SimRng) -> Result<i8> {
    let mut probs = [0.0f64; 2];
    for b in branches.iter() {
        let w = b.amplitude.norm_sqr();
        probs[0] += w * b.units[unit][0].norm_sqr();
        probs[1] += w * b.units[unit][1].norm_sqr();
    }
    let outcome: i8 = if sample_index(&probs, rng)? == 1 { 1 } else { -1 };
    for b in branches.iter_mut() {
        b.amplitude *= b.units[unit][slot(outcome)];
        b.units[unit] = basis(outcome);
    }
    renormalize(branches)?;
    Ok(outcome)
}

fn check_norm(branches: &[FormingBranch]) -> Result<()> {
    let n = stable_sum(branches.iter().map(|b| b.amplitude.norm_sqr()));
    if (n - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::InvariantViolation(format!("schema superposition norm^2 = {n}")));
    }
    for b in branches {
        for q in &b.units {
            let u = q[0].norm_sqr() + q[1].norm_sqr();
            if (u - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::InvariantViolation(format!("unit state norm^2 = {u}")));
            }
        }
    }
    Ok(())
}

fn run_trial(
    cfg: &ExperimentConfig,
    policy: CollapsePolicy,
    patterns: &[Pattern],
    memory: SchemaMemory,
    trial: usize,
) -> Result<TrialOutcome> {
    let n = cfg.n_neurons;
    let mut env = derived_rng(cfg.seed, &[STREAM_ENVIRONMENT, trial as u64]);
    let k = env.random_range(0..patterns.len());
    let cue = patterns[k].with_random_flips(cfg.cue_flips, &mut env);

    let alternatives: Vec<(Pattern, f64)> =
        patterns.iter().map(|p| (p.clone(), (cfg.cue_sharpness * cue.overlap(p)).exp())).collect();
    let superposition = form_branches(&alternatives)?;
    let mut branches: Vec<FormingBranch> = superposition
        .branches()
        .iter()
        .zip(patterns)
        .map(|(b, target)| FormingBranch {
            label: b.label.clone(),
            target: target.clone(),
            amplitude: b.weight,
            units: cue.units().iter().map(|v| basis(*v)).collect(),
            rotating: cue.units().iter().zip(target.units()).map(|(c, t)| c != t).collect(),
            infidelity: 0.0,
        })
        .collect();

    let mut rng = derived_rng(cfg.seed, &[STREAM_COLLAPSE, trial as u64]);
    let angle = std::f64::consts::FRAC_PI_2 / cfg.n_steps as f64;
    let (sin, cos) = angle.sin_cos();
    let mut counts = Vec::with_capacity(cfg.n_steps + 1);
    let mut collapsed = false;
    let mut collapse_events = 0u64;

    for step in 0..=cfg.n_steps {
        if step > 0 {
            for b in branches.iter_mut() {
                for a in 0..n {
                    if !b.rotating[a] {
                        continue;
                    }
                    let c = slot(cue.units()[a]);
                    let o = 1 - c;
                    let q = b.units[a];
                    let mut r = q;
                    r[c] = q[c] * cos - q[o] * sin;
                    r[o] = q[c] * sin + q[o] * cos;
                    b.units[a] = r;
                }
            }
        }
        match policy {
            CollapsePolicy::PerSiteEveryStep if step > 0 => {
                for a in 0..n {
                    measure_unit(&mut branches, a, &mut rng)?;
                    collapse_events += 1;
                }
            }
            CollapsePolicy::BranchLevelAfterSeparation
                if !collapsed && (step == cfg.n_steps || separated(&branches, cfg.separation_threshold)) =>
            {
                let (label, post) = sparse_collapse(&branch_set(&branches)?, &mut rng)?;
                branches.retain(|b| b.label == label);
                branches[0].amplitude = post.branches()[0].weight;
                collapsed = true;
                collapse_events += 1;
            }
            _ => {}
        }
        if step > 0 {
            // distance of every branch from its own collapse-free development
            let (bs, bc) = (angle * step as f64).sin_cos();
            for b in branches.iter_mut() {
                let mut sum = 0.0;
                for a in 0..n {
                    let c = cue.units()[a];
                    let reference = if b.rotating[a] {
                        let mut q = [Complex64::new(0.0, 0.0); 2];
                        q[slot(c)] = Complex64::new(bc, 0.0);
                        q[1 - slot(c)] = Complex64::new(bs, 0.0);
                        q
                    } else {
                        basis(c)
                    };
                    let loss = 1.0 - inner(&reference, &b.units[a]).norm_sqr();
                    // repeated small rotations leave ~1e-16 residue on undisturbed units
                    if loss > 1e-12 {
                        sum += loss;
                    }
                }
                b.infidelity += sum / n as f64;
            }
        }
        check_norm(&branches)?;
        counts.push(branches.len() as u64);
    }

    let final_weights: Vec<f64> = branches.iter().map(|b| b.amplitude.norm_sqr()).collect();
    let disruption = stable_sum(branches.iter().map(|b| b.amplitude.norm_sqr() * b.infidelity)) / cfg.n_steps as f64;

    let memory = match policy {
        CollapsePolicy::None => {
            let mut m = memory;
            for b in &branches {
                m = m.facilitate_scaled(&b.target, cfg.facilitation_threshold, b.amplitude.norm_sqr())?;
            }
            m
        }
        CollapsePolicy::PerSiteEveryStep | CollapsePolicy::BranchLevelAfterSeparation => {
            // read out every unit; after per-site measurement all branches agree
            let mut units = Vec::with_capacity(n);
            for a in 0..n {
                let q = branches[0].units[a];
                let pick = sample_index(&[q[0].norm_sqr(), q[1].norm_sqr()], &mut rng)?;
                units.push(if pick == 1 { 1 } else { -1 });
            }
            let actual = Pattern::from_units(units)?;
            memory.facilitate(&actual, cfg.facilitation_threshold)?
        }
    };
    if !memory.is_symmetric_zero_diagonal() {
        return Err(Error::InvariantViolation("memory lost symmetry".into()));
    }
    Ok(TrialOutcome { memory, disruption, counts, final_weights, collapse_events })
}

fn learning_score(cfg: &ExperimentConfig, patterns: &[Pattern], memory: &SchemaMemory) -> Result<f64> {
    if cfg.n_test_cues == 0 {
        return Ok(0.0);
    }
    let mut scores = Vec::with_capacity(cfg.n_test_cues);
    for i in 0..cfg.n_test_cues {
        let mut rng = derived_rng(cfg.seed, &[STREAM_TEST, i as u64]);
        let k = rng.random_range(0..patterns.len());
        let cue = patterns[k].with_random_flips(cfg.test_flips, &mut rng);
        let out = recall(memory, &cue, cfg.recall_sweeps)?;
        scores.push(out.pattern.agreement(&patterns[k]) as f64 / cfg.n_neurons as f64);
    }
    Ok(stable_sum(scores) / cfg.n_test_cues as f64)
}

/// Runs the training loop and the held-out evaluation under one policy.
pub fn run_policy(cfg: &ExperimentConfig, policy: CollapsePolicy) -> Result<MetricsReport> {
    cfg.validate()?;
    let patterns = environment_patterns(cfg)?;
    let mut memory = SchemaMemory::new(cfg.n_neurons, cfg.learning_rate, cfg.facilitation_threshold)?;
    let mut counts = vec![0u64; cfg.n_steps + 1];
    let mut disruptions = Vec::with_capacity(cfg.n_trials);
    let mut weights = Vec::new();
    let mut collapse_events = 0;
    for trial in 0..cfg.n_trials {
        let out = run_trial(cfg, policy, &patterns, memory, trial)?;
        memory = out.memory;
        for (total, c) in counts.iter_mut().zip(&out.counts) {
            *total += c;
        }
        disruptions.push(out.disruption);
        weights.extend(out.final_weights);
        collapse_events += out.collapse_events;
    }
    Ok(MetricsReport {
        experiment: "collapse_level".into(),
        policy,
        seed: cfg.seed,
        learning_score: Some(learning_score(cfg, &patterns, &memory)?),
        disruption_index: Some(stable_sum(disruptions) / cfg.n_trials as f64),
        branch_count_trace: counts,
        branch_weight_stats: WeightStats::from_weights(&weights),
        collapse_events,
        truncated: false,
        config: cfg.with_policy(policy),
        version: ARTIFACT_VERSION.into(),
    })
}

/// Runs every policy on identical seeds; reports come back in
/// [`CollapsePolicy::ALL`] order.
pub fn run_collapse_level_experiment(cfg: &ExperimentConfig) -> Result<Vec<MetricsReport>> {
    cfg.validate()?;
    CollapsePolicy::ALL.par_iter().map(|p| run_policy(cfg, *p)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedScores {
    pub seed: u64,
    pub learning_per_site: f64,
    pub learning_branch_level: f64,
    pub disruption_per_site: f64,
    pub disruption_branch_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignTestSummary {
    pub alpha: f64,
    pub seeds: Vec<SeedScores>,
    /// Branch-level learning above per-site learning.
    pub learning: SignTest,
    /// Per-site disruption above branch-level disruption.
    pub disruption: SignTest,
    pub learning_pass: bool,
    pub disruption_pass: bool,
    pub config: ExperimentConfig,
    pub version: String,
}

/// Repeats the per-site and branch-level runs over `n_seeds` derived seeds
/// and applies one-sided sign tests at `alpha = 0.05`.
pub fn collapse_level_sign_test(cfg: &ExperimentConfig) -> Result<SignTestSummary> {
    cfg.validate()?;
    let alpha = 0.05;
    let seeds: Vec<SeedScores> = (0..cfg.n_seeds as u64)
        .into_par_iter()
        .map(|i| {
            let run = cfg.with_seed(derive_seed(cfg.seed, &[STREAM_SEEDS, i]));
            let site = run_policy(&run, CollapsePolicy::PerSiteEveryStep)?;
            let branch = run_policy(&run, CollapsePolicy::BranchLevelAfterSeparation)?;
            Ok(SeedScores {
                seed: run.seed,
                learning_per_site: site.learning_score.unwrap_or_default(),
                learning_branch_level: branch.learning_score.unwrap_or_default(),
                disruption_per_site: site.disruption_index.unwrap_or_default(),
                disruption_branch_level: branch.disruption_index.unwrap_or_default(),
            })
        })
        .collect::<Result<_>>()?;
    let learning = sign_test(&seeds.iter().map(|s| (s.learning_branch_level, s.learning_per_site)).collect::<Vec<_>>());
    let disruption =
        sign_test(&seeds.iter().map(|s| (s.disruption_per_site, s.disruption_branch_level)).collect::<Vec<_>>());
    Ok(SignTestSummary {
        alpha,
        learning_pass: learning.significant(alpha),
        disruption_pass: disruption.significant(alpha),
        seeds,
        learning,
        disruption,
        config: cfg.clone(),
        version: ARTIFACT_VERSION.into(),
    })
}
