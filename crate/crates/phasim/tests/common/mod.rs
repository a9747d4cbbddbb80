//! Shared builders and assertions for the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use phasim::model::JobState;
use phasim::{JobSpec, PhaseKind, PhaseSpec, Speedup, SystemSnapshot};

pub fn speedup(alpha: f64) -> Speedup {
    Speedup::new(alpha).expect("valid speedup exponent")
}

pub fn job(id: u64, arrival: f64, phases: &[(PhaseKind, f64)]) -> JobSpec {
    JobSpec {
        id,
        arrival,
        phases: phases
            .iter()
            .map(|&(kind, size)| PhaseSpec { kind, size })
            .collect(),
    }
}

/// Single-phase elastic job.
pub fn elastic_job(id: u64, arrival: f64, size: f64) -> JobSpec {
    job(id, arrival, &[(PhaseKind::Elastic, size)])
}

/// Single-phase inelastic job.
pub fn inelastic_job(id: u64, arrival: f64, size: f64) -> JobSpec {
    job(id, arrival, &[(PhaseKind::Inelastic, size)])
}

/// Snapshot holding fresh (unworked) copies of the given jobs.
pub fn snapshot(time: f64, servers: f64, specs: &[JobSpec]) -> SystemSnapshot {
    let jobs = specs
        .iter()
        .map(|s| JobState::new(Arc::new(s.clone())))
        .collect();
    SystemSnapshot::new(time, servers, jobs)
}

/// Poisson-arrival workload with the shared slot/phase/size model.
pub fn stochastic_jobs(
    rate: f64,
    slots: u64,
    mean_phases: f64,
    mean_size: f64,
    seed: u64,
) -> Vec<JobSpec> {
    phasim::workload::generate_stochastic(&phasim::workload::StochasticConfig {
        arrival_rate: rate,
        horizon_slots: slots,
        mean_phases,
        mean_phase_size: mean_size,
        first_phase: phasim::workload::FirstPhase::RandomEqual,
        seed,
    })
    .expect("valid config")
}

pub fn assert_close(actual: f64, expected: f64, rel: f64, what: &str) {
    let scale = 1.0f64.max(expected.abs());
    assert!(
        (actual - expected).abs() <= rel * scale,
        "{what}: got {actual}, want {expected} (rel tol {rel})"
    );
}
