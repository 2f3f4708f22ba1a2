//! A lattice-field system described three ways: as a classical register
//! machine, as a probability ensemble over all of its configurations, and as
//! an amplitude vector over the same index space. Collapse events, a Hebbian
//! schema memory and branching experiments are built on top.
//!
//! Module map:
//!
//! * [`config_state`] lattice parameters, the reversible classical update and
//!   the mixed-radix enumeration of configurations.
//! * [`ensemble`] probability vectors evolved by push-forward.
//! * [`amplitudes`] dense amplitude vectors, partitions, sparse branch sets
//!   and the collapse operations.
//! * [`schema`] Hopfield-style pattern memory with facilitation and recall.
//! * [`experiments`] collapse-placement and no-collapse branching experiments
//!   and Born-rule trial harnesses.
//! * [`cli`] the command-line driver.

pub mod amplitudes;
pub mod cli;
pub mod config_state;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod kvdoc;
pub mod schema;
pub mod seeding;
pub mod stats;

pub use error::{Error, Result};

/// Largest state space the dense representations will allocate.
pub const DENSE_STATE_CAP: usize = 1_000_000;

/// Absolute tolerance for probability normalization.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Absolute tolerance for amplitude-vector and branch-set norms.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Compensated (Neumaier) summation.
pub fn stable_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
