//! Reference event-driven engine: clear O(n)-per-event simulation used as the
//! semantics anchor and for full-state recording.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::engine::{Event, EventKind, IntervalRecord, RecordLevel, Trace};
use crate::model::{Advance, Allocation, JobSpec, JobState, ModelError, SystemSnapshot};
use crate::policy::{check_feasible, Policy};
use crate::speedup::Speedup;
use crate::tolerance;

use super::EngineError;

/// Earliest upcoming event given the current state: the next arrival or the
/// earliest phase boundary under the allocation. Jobs with zero speed never
/// produce events. Ties resolve Arrival first, then lowest job id.
/// Returns `None` when nothing is active and no arrival is pending.
pub fn next_event(
    snapshot: &SystemSnapshot,
    alloc: &Allocation,
    next_arrival: Option<f64>,
) -> Option<(f64, EventKind)> {
    // Candidates ordered by (time, arrival-first, job id). Arrivals carry
    // id u64::MAX so that at an exact tie the arrival wins via the middle
    // component, and completing jobs tie-break on their id.
    let mut best: Option<(f64, u8, u64, EventKind)> =
        next_arrival.map(|t| (t, 0, u64::MAX, EventKind::Arrival));
    for job in snapshot.jobs() {
        let speed = alloc.speed(job.id());
        if speed <= 0.0 {
            continue;
        }
        let t = snapshot.time + job.remaining_in_phase() / speed;
        let kind = if job.current_phase() + 1 == job.spec().phases.len() {
            EventKind::JobCompletion
        } else {
            EventKind::PhaseCompletion
        };
        let cand = (t, 1, job.id(), kind);
        let better = match best {
            None => true,
            Some((bt, brank, bid, _)) => {
                (cand.0, cand.1, cand.2) < (bt, brank, bid)
            }
        };
        if better {
            best = Some(cand);
        }
    }
    best.map(|(t, _, _, kind)| (t, kind))
}

pub(crate) fn sorted_specs(workload: &[JobSpec]) -> Result<Vec<Arc<JobSpec>>, EngineError> {
    let mut specs: Vec<Arc<JobSpec>> = Vec::with_capacity(workload.len());
    for spec in workload {
        spec.validate()?;
        specs.push(Arc::new(spec.clone()));
    }
    specs.sort_by(|a, b| a.arrival.total_cmp(&b.arrival).then(a.id.cmp(&b.id)));
    let mut ids: Vec<u64> = specs.iter().map(|s| s.id).collect();
    ids.sort_unstable();
    for w in ids.windows(2) {
        if w[0] == w[1] {
            return Err(ModelError::DuplicateJobId(w[0]).into());
        }
    }
    Ok(specs)
}

pub(crate) fn validate_run_inputs(policy: &Policy, servers: f64) -> Result<(), EngineError> {
    policy.validate()?;
    if !servers.is_finite() || servers <= 0.0 {
        return Err(crate::policy::PolicyError::InvalidServers(servers).into());
    }
    Ok(())
}

/// Runs `policy` over the workload until every job completes.
pub fn run(
    workload: &[JobSpec],
    policy: &Policy,
    servers: f64,
    f: &Speedup,
    record: RecordLevel,
) -> Result<Trace, EngineError> {
    validate_run_inputs(policy, servers)?;
    let specs = sorted_specs(workload)?;

    let mut pending = 0usize;
    let mut active: Vec<JobState> = Vec::new();
    let mut events: Vec<Event> = Vec::new();
    let mut completions: BTreeMap<u64, f64> = BTreeMap::new();
    let mut intervals: Vec<IntervalRecord> = Vec::new();
    let mut flow_time = 0.0;
    let mut integral_n = 0.0;
    let mut clamped_steps = 0u64;
    let mut t = 0.0;

    while pending < specs.len() || !active.is_empty() {
        if active.is_empty() {
            // Idle: jump to the next arrival batch.
            t = specs[pending].arrival;
            while pending < specs.len() && specs[pending].arrival == t {
                let spec = specs[pending].clone();
                events.push(Event {
                    time: t,
                    kind: EventKind::Arrival,
                    job: spec.id,
                });
                active.push(JobState::new(spec));
                pending += 1;
            }
        }

        let snapshot = SystemSnapshot::new(t, servers, active.clone());
        let alloc = policy.allocate(&snapshot, f)?;
        if !check_feasible(&alloc, &snapshot, f)? {
            return Err(EngineError::InfeasibleAllocation { time: t });
        }
        if record == RecordLevel::Full {
            intervals.push(IntervalRecord {
                start: t,
                snapshot: snapshot.clone(),
                allocation: alloc.clone(),
            });
        }

        let next_arrival = specs.get(pending).map(|s| s.arrival);
        let Some((t_next, _)) = next_event(&snapshot, &alloc, next_arrival) else {
            return Err(EngineError::Livelock {
                time: t,
                active: active.len(),
            });
        };

        let dt = (t_next - t).max(0.0);
        if dt > 0.0 && dt < tolerance::MIN_STEP {
            clamped_steps += 1;
        }
        integral_n += active.len() as f64 * dt;
        t = t_next;

        // Advance everyone; collect phase/job completions at this instant.
        let mut phase_done: Vec<u64> = Vec::new();
        let mut job_done: Vec<u64> = Vec::new();
        for job in active.iter_mut() {
            match job.advance(alloc.speed(job.id()), dt)? {
                Advance::Continuing => {}
                Advance::PhaseCompleted => phase_done.push(job.id()),
                Advance::JobCompleted => job_done.push(job.id()),
            }
        }

        // Admit arrivals at this instant.
        let mut arrived: Vec<u64> = Vec::new();
        while pending < specs.len() && specs[pending].arrival == t {
            let spec = specs[pending].clone();
            arrived.push(spec.id);
            active.push(JobState::new(spec));
            pending += 1;
        }

        arrived.sort_unstable();
        phase_done.sort_unstable();
        job_done.sort_unstable();
        for &id in &arrived {
            events.push(Event {
                time: t,
                kind: EventKind::Arrival,
                job: id,
            });
        }
        for &id in &phase_done {
            events.push(Event {
                time: t,
                kind: EventKind::PhaseCompletion,
                job: id,
            });
        }
        for &id in &job_done {
            events.push(Event {
                time: t,
                kind: EventKind::JobCompletion,
                job: id,
            });
        }

        if !job_done.is_empty() {
            for job in &active {
                if job.is_finished() {
                    completions.insert(job.id(), t);
                    flow_time += t - job.arrival();
                }
            }
            active.retain(|j| !j.is_finished());
        }
    }

    Ok(Trace {
        events,
        intervals: (record == RecordLevel::Full).then_some(intervals),
        completions,
        flow_time,
        integral_n,
        clamped_steps,
        end_time: t,
    })
}
