//! Potential-function evaluation over paired system states.
//!
//! Two potentials share the sequential-work term Φ₂ (total remaining
//! sequential work of the algorithm's jobs minus the comparison's):
//!
//! * the online-arrival potential, whose first term weighs each of the
//!   algorithm's unfinished jobs by its arrival rank and counts the excess
//!   remaining size over the comparison schedule; and
//! * the time-zero potential, whose first term scales the summed excess
//!   remaining sizes by the per-job speed the equal-split policy would run
//!   at with the current backlog.
//!
//! Both are evaluated as Φ = c₁·Φ₁ + c₂·Φ₂ for caller-chosen constants.

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::model::{PhaseKind, SystemSnapshot};
use crate::speedup::Speedup;

/// Joint evaluation of both potentials at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialEval {
    pub time: f64,
    /// Rank-weighted excess-size term of the online-arrival potential.
    pub phi1: f64,
    /// Remaining sequential work, algorithm minus comparison.
    pub phi2: f64,
    /// c₁·phi1 + c₂·phi2.
    pub phi_total: f64,
    /// Backlog-speed-weighted excess-size term of the time-zero potential.
    pub phi_sf1: f64,
    /// c₁·phi_sf1 + c₂·phi2.
    pub phi_sf_total: f64,
}

/// How ranks are assigned to the algorithm's unfinished jobs, in arrival
/// order. The correct convention is `OldestFirst` (oldest = 1, newest = n);
/// `NewestFirst` inverts it and exists solely as a deliberately wrong
/// evaluator for exercising the verification harness (it makes the
/// online-arrival potential jump upward on arrivals).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankConvention {
    OldestFirst,
    NewestFirst,
}

/// Lightweight per-job state: everything the potentials need. Lists of
/// remnants are always ordered by (arrival, id), oldest job first.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Remnant {
    pub id: u64,
    /// Remaining size summed over all remaining phases.
    pub rem_total: f64,
    /// Remaining size summed over remaining sequential phases.
    pub rem_inelastic: f64,
    /// Kind of the phase currently in progress.
    pub kind: PhaseKind,
}

/// Core evaluator over remnant lists. `alg` must be sorted by
/// (arrival, id); `cmp` jobs absent from the list count as finished.
pub(crate) fn eval_potential(
    alg: &[Remnant],
    cmp: &[Remnant],
    time: f64,
    servers: f64,
    c1: f64,
    c2: f64,
    f: &Speedup,
    ranks: RankConvention,
) -> PotentialEval {
    let cmp_total: std::collections::HashMap<u64, f64> =
        cmp.iter().map(|r| (r.id, r.rem_total)).collect();

    let n = alg.len();
    let p_servers = f.p(servers);
    let mut phi1 = 0.0;
    let mut excess_sum = 0.0;
    for (i, job) in alg.iter().enumerate() {
        let rank = match ranks {
            RankConvention::OldestFirst => i + 1,
            RankConvention::NewestFirst => n - i,
        };
        let cmp_rem = cmp_total.get(&job.id).copied().unwrap_or(0.0);
        let excess = (job.rem_total - cmp_rem).max(0.0);
        phi1 += f.p(rank as f64) / p_servers * excess;
        excess_sum += excess;
    }
    let phi_sf1 = if n == 0 {
        0.0
    } else {
        f.p(n as f64 / servers) * excess_sum
    };

    let alg_inelastic: f64 = alg.iter().map(|r| r.rem_inelastic).sum();
    let cmp_inelastic: f64 = cmp.iter().map(|r| r.rem_inelastic).sum();
    let phi2 = alg_inelastic - cmp_inelastic;

    PotentialEval {
        time,
        phi1,
        phi2,
        phi_total: c1 * phi1 + c2 * phi2,
        phi_sf1,
        phi_sf_total: c1 * phi_sf1 + c2 * phi2,
    }
}

pub(crate) fn snapshot_remnants(snapshot: &SystemSnapshot) -> Vec<Remnant> {
    snapshot
        .jobs()
        .iter()
        .map(|j| Remnant {
            id: j.id(),
            rem_total: j.remaining_total(),
            rem_inelastic: j.remaining_inelastic(),
            kind: j.kind().unwrap_or(PhaseKind::Elastic),
        })
        .collect()
}

fn check_same_instant(
    alg: &SystemSnapshot,
    cmp: &SystemSnapshot,
) -> Result<(), AnalysisError> {
    if alg.time != cmp.time {
        return Err(AnalysisError::MismatchedSnapshots {
            what: "snapshots taken at different times",
        });
    }
    if alg.servers != cmp.servers {
        return Err(AnalysisError::MismatchedSnapshots {
            what: "snapshots describe different server counts",
        });
    }
    // Any job present in both must be the same job.
    for a in alg.jobs() {
        if let Some(c) = cmp.job(a.id()) {
            if a.spec() != c.spec() {
                return Err(AnalysisError::MismatchedSnapshots {
                    what: "same job id carries different phase structure",
                });
            }
        }
    }
    Ok(())
}

/// Evaluates the online-arrival potential (and, for reference, the time-zero
/// one) at the snapshots' instant. Ranks come from the algorithm snapshot's
/// arrival order; comparison-side remaining sizes are read by job id and
/// treated as zero for jobs the comparison has finished.
pub fn phi_online(
    snapshot_alg: &SystemSnapshot,
    snapshot_cmp: &SystemSnapshot,
    c1: f64,
    c2: f64,
    f: &Speedup,
) -> Result<PotentialEval, AnalysisError> {
    check_same_instant(snapshot_alg, snapshot_cmp)?;
    Ok(eval_potential(
        &snapshot_remnants(snapshot_alg),
        &snapshot_remnants(snapshot_cmp),
        snapshot_alg.time,
        snapshot_alg.servers,
        c1,
        c2,
        f,
        RankConvention::OldestFirst,
    ))
}

/// Evaluates the time-zero potential; every job in either snapshot must have
/// arrived at time 0.
pub fn phi_time_zero(
    snapshot_alg: &SystemSnapshot,
    snapshot_cmp: &SystemSnapshot,
    c1: f64,
    c2: f64,
    f: &Speedup,
) -> Result<PotentialEval, AnalysisError> {
    check_same_instant(snapshot_alg, snapshot_cmp)?;
    for job in snapshot_alg.jobs().iter().chain(snapshot_cmp.jobs()) {
        if job.arrival() != 0.0 {
            return Err(AnalysisError::PositiveArrival {
                job: job.id(),
                arrival: job.arrival(),
            });
        }
    }
    Ok(eval_potential(
        &snapshot_remnants(snapshot_alg),
        &snapshot_remnants(snapshot_cmp),
        snapshot_alg.time,
        snapshot_alg.servers,
        c1,
        c2,
        f,
        RankConvention::OldestFirst,
    ))
}
