//! Event-driven continuous-time execution of a policy over a workload.
//!
//! Two interchangeable engines produce the same semantics:
//!
//! * [`run`] — the reference engine: O(n) per event, optionally recording the
//!   full piecewise state for potential-function verification.
//! * [`run_fast`] — a pooled virtual-time engine for large experiment grids;
//!   it records events, completions, and aggregate integrals only.
//!
//! Allocations are recomputed at events (arrivals, phase completions, job
//! completions) and held constant in between; every job advances by
//! speed · Δt per interval.

mod fast;
mod reference;

pub use fast::run_fast;
pub use reference::{next_event, run};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{Allocation, ModelError, SystemSnapshot};
use crate::policy::PolicyError;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("policy produced an infeasible allocation at t={time}")]
    InfeasibleAllocation { time: f64 },
    #[error("livelock: {active} active job(s) at t={time} but no progress and no pending arrival")]
    Livelock { time: f64, active: usize },
}

/// What happened at an event instant. At one instant, arrivals order before
/// phase completions, which order before job completions; within one kind,
/// job ids ascend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Arrival,
    PhaseCompletion,
    JobCompletion,
}

/// One entry of the event log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub job: u64,
}

/// System state and allocation over one inter-event interval
/// `[start, next interval's start)`.
#[derive(Debug, Clone)]
pub struct IntervalRecord {
    pub start: f64,
    pub snapshot: SystemSnapshot,
    pub allocation: Allocation,
}

/// How much state [`run`] should keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordLevel {
    /// Events, completions, and aggregate integrals only.
    Lean,
    /// Additionally every inter-event snapshot and allocation.
    Full,
}

/// Result of executing a workload to completion.
#[derive(Debug, Clone)]
pub struct Trace {
    /// Time-ordered event log.
    pub events: Vec<Event>,
    /// Piecewise state record; present only at [`RecordLevel::Full`].
    pub intervals: Option<Vec<IntervalRecord>>,
    /// Completion time d_j per job id.
    pub completions: BTreeMap<u64, f64>,
    /// Σ_j (d_j − a_j).
    pub flow_time: f64,
    /// ∫ n(t) dt accumulated over the run; equals `flow_time` up to float
    /// noise.
    pub integral_n: f64,
    /// Number of positive inter-event steps shorter than the degenerate-step
    /// threshold.
    pub clamped_steps: u64,
    /// Time of the last event.
    pub end_time: f64,
}

impl Trace {
    /// Flow time of one job; `None` if the job never completed (it always
    /// does in a finished trace).
    pub fn job_flow(&self, id: u64, arrival: f64) -> Option<f64> {
        self.completions.get(&id).map(|d| d - arrival)
    }
}

