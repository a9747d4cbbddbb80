//! Competitive-ratio bound calculators, parameter search, potential-function
//! evaluation with jump/drift verification, and optimal-cost oracles.

mod bounds;
mod opt;
mod potential;
mod verify;

pub use bounds::{
    best_equi_delta, check_conditions, equi_bound, equi_weights, lcfs_bound, search_beta,
    BoundResult, ConditionCheck, ConditionId, ConditionReport,
};
pub use opt::{brute_force_opt, empirical_ratio, opt_lower_bound, BruteForceResult};
pub use potential::{phi_online, phi_time_zero, PotentialEval, RankConvention};
pub use verify::{
    verify_drifts, verify_jumps, verify_jumps_with_ranks, DriftCase, DriftReport, DriftRow,
    DriftSide, JumpCheck, JumpReport, PotentialKind,
};

use thiserror::Error;

use crate::model::ModelError;
use crate::policy::PolicyError;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("alpha must exceed 1, got {0}")]
    InvalidAlpha(f64),
    #[error("bound undefined: alpha*(1-delta) must exceed 1 (alpha={alpha}, delta={delta})")]
    EquiDomain { alpha: f64, delta: f64 },
    #[error("snapshots disagree: {what}")]
    MismatchedSnapshots { what: &'static str },
    #[error("traces cover different workloads")]
    MismatchedWorkloads,
    #[error("time-zero potential requires every arrival at 0; job {job} arrives at {arrival}")]
    PositiveArrival { job: u64, arrival: f64 },
    #[error("trace lacks per-interval records; rerun with full recording")]
    MissingIntervals,
    #[error("comparison allocation infeasible at t={time}")]
    InfeasibleComparison { time: f64 },
    #[error("exhaustive search supports at most {max} jobs, got {count}")]
    TooManyJobs { count: usize, max: usize },
    #[error("allocation grid must be positive and evenly divide the server count, got {0}")]
    InvalidGrid(f64),
    #[error("time step must be positive and evenly divide every arrival time, got {0}")]
    InvalidStep(f64),
    #[error("exhaustive search exceeded its state budget ({0} states)")]
    SearchBudget(usize),
    #[error("flow-time lower bound is zero; ratio undefined")]
    ZeroLowerBound,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}
