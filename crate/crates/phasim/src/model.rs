//! Core domain types: jobs, phases, dynamic job state, system snapshots, and
//! server allocations.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tolerance;

/// Errors from the core model types.
#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("speedup exponent must be finite and > 1, got {0}")]
    InvalidAlpha(f64),
    #[error("job {job}: requested work {work} exceeds remaining phase work {remaining}")]
    AdvanceBeyondPhase { job: u64, work: f64, remaining: f64 },
    #[error("job {0} is already finished")]
    JobFinished(u64),
    #[error("{what} must be finite and non-negative, got {value}")]
    InvalidNumber { what: &'static str, value: f64 },
    #[error("job {job}: phase {phase} has non-positive size {size}")]
    InvalidPhaseSize { job: u64, phase: usize, size: f64 },
    #[error("job {0} has no phases")]
    EmptyPhases(u64),
    #[error("duplicate job id {0}")]
    DuplicateJobId(u64),
}

/// Whether a phase can use many servers or at most one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseKind {
    /// Parallelizable: speed P(k) on k servers, k unbounded.
    Elastic,
    /// Sequential: at most one server, speed capped at 1.
    Inelastic,
}

impl PhaseKind {
    pub fn other(self) -> Self {
        match self {
            PhaseKind::Elastic => PhaseKind::Inelastic,
            PhaseKind::Inelastic => PhaseKind::Elastic,
        }
    }
}

/// One phase of a job: its kind and the amount of work in it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpec {
    pub kind: PhaseKind,
    pub size: f64,
}

/// Immutable description of a job: identity, arrival time, and phase list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    pub id: u64,
    pub arrival: f64,
    pub phases: Vec<PhaseSpec>,
}

impl JobSpec {
    /// Checks arrival and phase sizes are well-formed.
    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.arrival.is_finite() || self.arrival < 0.0 {
            return Err(ModelError::InvalidNumber {
                what: "arrival time",
                value: self.arrival,
            });
        }
        if self.phases.is_empty() {
            return Err(ModelError::EmptyPhases(self.id));
        }
        for (i, ph) in self.phases.iter().enumerate() {
            if !ph.size.is_finite() || ph.size <= 0.0 {
                return Err(ModelError::InvalidPhaseSize {
                    job: self.id,
                    phase: i,
                    size: ph.size,
                });
            }
        }
        Ok(())
    }

    /// Total work across all phases.
    pub fn total_work(&self) -> f64 {
        self.phases.iter().map(|p| p.size).sum()
    }

    /// Work in phases of the given kind.
    pub fn work_of_kind(&self, kind: PhaseKind) -> f64 {
        self.phases
            .iter()
            .filter(|p| p.kind == kind)
            .map(|p| p.size)
            .sum()
    }

    pub(crate) fn suffix_work(&self, from_phase: usize) -> (f64, f64) {
        let mut total = 0.0;
        let mut inelastic = 0.0;
        for ph in &self.phases[from_phase..] {
            total += ph.size;
            if ph.kind == PhaseKind::Inelastic {
                inelastic += ph.size;
            }
        }
        (total, inelastic)
    }
}

/// Outcome of advancing a job by one allocation interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Advance {
    /// Still inside the same phase.
    Continuing,
    /// Crossed into the next phase.
    PhaseCompleted,
    /// Finished the last phase; the job is done.
    JobCompleted,
}

/// Dynamic state of one job: current phase and remaining-work ledgers.
#[derive(Debug, Clone)]
pub struct JobState {
    spec: Arc<JobSpec>,
    current_phase: usize,
    remaining_in_phase: f64,
    remaining_total: f64,
    remaining_inelastic: f64,
}

impl JobState {
    /// Fresh state at the job's arrival: first phase untouched.
    pub fn new(spec: Arc<JobSpec>) -> Self {
        let (total, inelastic) = spec.suffix_work(0);
        let first = spec.phases[0].size;
        Self {
            spec,
            current_phase: 0,
            remaining_in_phase: first,
            remaining_total: total,
            remaining_inelastic: inelastic,
        }
    }

    pub fn id(&self) -> u64 {
        self.spec.id
    }

    pub fn arrival(&self) -> f64 {
        self.spec.arrival
    }

    pub fn spec(&self) -> &Arc<JobSpec> {
        &self.spec
    }

    pub fn current_phase(&self) -> usize {
        self.current_phase
    }

    pub fn remaining_in_phase(&self) -> f64 {
        self.remaining_in_phase
    }

    pub fn remaining_total(&self) -> f64 {
        self.remaining_total
    }

    pub fn remaining_inelastic(&self) -> f64 {
        self.remaining_inelastic
    }

    pub fn is_finished(&self) -> bool {
        self.current_phase >= self.spec.phases.len()
    }

    /// Kind of the phase currently being processed; `None` once finished.
    pub fn kind(&self) -> Option<PhaseKind> {
        self.spec.phases.get(self.current_phase).map(|p| p.kind)
    }

    /// Processes `speed · duration` work within the current phase.
    ///
    /// The work may not exceed the remaining phase work by more than the
    /// boundary-detection tolerance; landing within that tolerance of the
    /// boundary rolls the job into its next phase (or completes it).
    /// Zero speed or duration leaves the state unchanged.
    pub fn advance(&mut self, speed: f64, duration: f64) -> Result<Advance, ModelError> {
        if self.is_finished() {
            return Err(ModelError::JobFinished(self.id()));
        }
        if !speed.is_finite() || speed < 0.0 {
            return Err(ModelError::InvalidNumber {
                what: "speed",
                value: speed,
            });
        }
        if !duration.is_finite() || duration < 0.0 {
            return Err(ModelError::InvalidNumber {
                what: "duration",
                value: duration,
            });
        }
        let work = speed * duration;
        if work == 0.0 {
            return Ok(Advance::Continuing);
        }
        if work > self.remaining_in_phase + tolerance::WORK_ABS {
            return Err(ModelError::AdvanceBeyondPhase {
                job: self.id(),
                work,
                remaining: self.remaining_in_phase,
            });
        }
        let left = self.remaining_in_phase - work;
        if left <= tolerance::WORK_ABS {
            self.current_phase += 1;
            // Recompute the ledgers from the phase list so float drift
            // cannot accumulate across phases.
            let (total, inelastic) = self.spec.suffix_work(self.current_phase);
            self.remaining_total = total;
            self.remaining_inelastic = inelastic;
            if self.is_finished() {
                self.remaining_in_phase = 0.0;
                Ok(Advance::JobCompleted)
            } else {
                self.remaining_in_phase = self.spec.phases[self.current_phase].size;
                Ok(Advance::PhaseCompleted)
            }
        } else {
            self.remaining_in_phase = left;
            self.remaining_total -= work;
            if self.spec.phases[self.current_phase].kind == PhaseKind::Inelastic {
                self.remaining_inelastic -= work;
            }
            Ok(Advance::Continuing)
        }
    }
}

/// Immutable view of the system at one instant: all active jobs, sorted by
/// (arrival, id) so that index order is arrival order.
#[derive(Debug, Clone)]
pub struct SystemSnapshot {
    pub time: f64,
    pub servers: f64,
    jobs: Vec<JobState>,
}

impl SystemSnapshot {
    /// Builds a snapshot; jobs are sorted into arrival order (ties by id).
    pub fn new(time: f64, servers: f64, mut jobs: Vec<JobState>) -> Self {
        jobs.sort_by(|a, b| {
            a.arrival()
                .total_cmp(&b.arrival())
                .then(a.id().cmp(&b.id()))
        });
        Self {
            time,
            servers,
            jobs,
        }
    }

    /// Active jobs in arrival order (oldest first).
    pub fn jobs(&self) -> &[JobState] {
        &self.jobs
    }

    pub fn n(&self) -> usize {
        self.jobs.len()
    }

    pub fn n_elastic(&self) -> usize {
        self.jobs
            .iter()
            .filter(|j| j.kind() == Some(PhaseKind::Elastic))
            .count()
    }

    pub fn n_inelastic(&self) -> usize {
        self.jobs
            .iter()
            .filter(|j| j.kind() == Some(PhaseKind::Inelastic))
            .count()
    }

    pub fn job(&self, id: u64) -> Option<&JobState> {
        self.jobs.iter().find(|j| j.id() == id)
    }

    pub fn contains(&self, id: u64) -> bool {
        self.job(id).is_some()
    }
}

/// Servers and speed granted to one job.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServerShare {
    pub servers: f64,
    pub speed: f64,
}

/// A server allocation: job id → (servers, speed). Jobs without an entry
/// receive nothing. Iteration order is deterministic (ascending id).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Allocation {
    shares: BTreeMap<u64, ServerShare>,
}

impl Allocation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, id: u64, share: ServerShare) {
        self.shares.insert(id, share);
    }

    pub fn get(&self, id: u64) -> Option<ServerShare> {
        self.shares.get(&id).copied()
    }

    /// Speed granted to `id`; zero when absent.
    pub fn speed(&self, id: u64) -> f64 {
        self.shares.get(&id).map_or(0.0, |s| s.speed)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, ServerShare)> + '_ {
        self.shares.iter().map(|(&id, &s)| (id, s))
    }

    pub fn len(&self) -> usize {
        self.shares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }
}
