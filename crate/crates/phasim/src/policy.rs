//! The five scheduling policies and allocation feasibility checking.
//!
//! Each policy maps a [`SystemSnapshot`] to an [`Allocation`]. Count-based
//! policies are split into a *case plan* (pure arithmetic on the counts
//! n, n_e, n_ι) and a *materializer* that picks the member jobs; the fast
//! engine reuses the same case plans so both execution paths share one
//! definition of the policy arithmetic.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Allocation, PhaseKind, ServerShare, SystemSnapshot};
use crate::speedup::Speedup;
use crate::tolerance;

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("policy invoked on an empty snapshot")]
    EmptySnapshot,
    #[error("allocation references job {0}, which is not active in the snapshot")]
    InactiveJob(u64),
    #[error("invalid policy parameter {name}={value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("servers must be finite and positive, got {0}")]
    InvalidServers(f64),
}

/// A scheduling policy with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    /// Serves the ⌈β·n⌉ most recent jobs, reserving capacity for inelastic
    /// work when the inelastic share of the queue reaches θ.
    FractionalLcfs { beta: f64, theta: f64 },
    /// Phase-aware equal split: inelastic jobs get unit speed when they make
    /// up a δ fraction of the queue; elastic jobs share the rest equally.
    PaEqui { delta: f64 },
    /// Phase-blind equal split; inelastic excess is wasted.
    BlindEqui,
    /// Unit speed to the oldest inelastic jobs first, equal split of the
    /// residue across elastic jobs.
    InelasticFirst,
    /// Strict FCFS capacity scan.
    PaFcfs,
}

impl Policy {
    /// Stable machine-readable name, used in CSV output.
    pub fn label(&self) -> &'static str {
        match self {
            Policy::FractionalLcfs { .. } => "fractional_lcfs",
            Policy::PaEqui { .. } => "pa_equi",
            Policy::BlindEqui => "blind_equi",
            Policy::InelasticFirst => "inelastic_first",
            Policy::PaFcfs => "pa_fcfs",
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match self {
            Policy::FractionalLcfs { beta, .. } => Some(*beta),
            _ => None,
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match self {
            Policy::FractionalLcfs { theta, .. } => Some(*theta),
            _ => None,
        }
    }

    pub fn delta(&self) -> Option<f64> {
        match self {
            Policy::PaEqui { delta } => Some(*delta),
            _ => None,
        }
    }

    /// Validates parameter domains: 0 < θ < β ≤ 1 and 0 < δ < 1.
    pub fn validate(&self) -> Result<(), PolicyError> {
        match *self {
            Policy::FractionalLcfs { beta, theta } => {
                if !(beta > 0.0 && beta <= 1.0) || !beta.is_finite() {
                    return Err(PolicyError::InvalidParameter {
                        name: "beta",
                        value: beta,
                        reason: "must lie in (0, 1]",
                    });
                }
                if !(theta > 0.0 && theta < beta) || !theta.is_finite() {
                    return Err(PolicyError::InvalidParameter {
                        name: "theta",
                        value: theta,
                        reason: "must lie in (0, beta)",
                    });
                }
                Ok(())
            }
            Policy::PaEqui { delta } => {
                if !(delta > 0.0 && delta < 1.0) || !delta.is_finite() {
                    return Err(PolicyError::InvalidParameter {
                        name: "delta",
                        value: delta,
                        reason: "must lie in (0, 1)",
                    });
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Computes this policy's allocation for the snapshot.
    pub fn allocate(
        &self,
        snapshot: &SystemSnapshot,
        f: &Speedup,
    ) -> Result<Allocation, PolicyError> {
        match *self {
            Policy::FractionalLcfs { beta, theta } => fractional_lcfs(snapshot, beta, theta, f),
            Policy::PaEqui { delta } => pa_equi(snapshot, delta, f),
            Policy::BlindEqui => blind_equi(snapshot, f),
            Policy::InelasticFirst => inelastic_first(snapshot, f),
            Policy::PaFcfs => pa_fcfs(snapshot, f),
        }
    }
}

/// ⌈x·n⌉ as a count, computed on the raw float product.
pub(crate) fn ceil_frac(x: f64, n: usize) -> usize {
    (x * n as f64).ceil() as usize
}

fn validate_snapshot(snapshot: &SystemSnapshot) -> Result<(), PolicyError> {
    if snapshot.n() == 0 {
        return Err(PolicyError::EmptySnapshot);
    }
    if !snapshot.servers.is_finite() || snapshot.servers <= 0.0 {
        return Err(PolicyError::InvalidServers(snapshot.servers));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Case plans (count arithmetic shared with the fast engine)
// ---------------------------------------------------------------------------

/// Structural case of the recency-sharing policy for given queue counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum LcfsPlan {
    /// β·n ≥ N: the m = ⌈β·n⌉ most recent jobs (any kind) share all servers.
    Saturated { m: usize, speed: f64 },
    /// β·n < N and the inelastic count reaches ⌈θ·n⌉: the c most recent
    /// inelastic jobs run at unit speed; the m_e = ⌈β·n_e⌉ most recent
    /// elastic jobs split the rest. `m_e` is 0 when there are no elastic jobs.
    InelasticHeavy {
        c: usize,
        m_e: usize,
        elastic_speed: f64,
    },
    /// β·n < N and few inelastic jobs: elastic jobs among the m = ⌈β·n⌉ most
    /// recent run at P(N/m); everything else idles.
    InelasticLight { m: usize, speed: f64 },
}

pub(crate) fn lcfs_plan(
    n: usize,
    n_elastic: usize,
    n_inelastic: usize,
    servers: f64,
    beta: f64,
    theta: f64,
    f: &Speedup,
) -> LcfsPlan {
    debug_assert_eq!(n, n_elastic + n_inelastic);
    let nf = n as f64;
    if beta * nf >= servers {
        let m = ceil_frac(beta, n);
        LcfsPlan::Saturated {
            m,
            speed: f.p(servers / m as f64),
        }
    } else if n_inelastic >= ceil_frac(theta, n) {
        let c = n_inelastic.min(servers.floor() as usize);
        let m_e = if n_elastic > 0 {
            ceil_frac(beta, n_elastic)
        } else {
            0
        };
        let elastic_speed = if m_e > 0 {
            f.p((servers - c as f64) / m_e as f64)
        } else {
            0.0
        };
        LcfsPlan::InelasticHeavy {
            c,
            m_e,
            elastic_speed,
        }
    } else {
        let m = ceil_frac(beta, n);
        LcfsPlan::InelasticLight {
            m,
            speed: f.p(servers / m as f64),
        }
    }
}

/// Structural case of the phase-aware equal split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum PaEquiPlan {
    /// n ≥ N: everyone gets N/n servers at P(N/n) (≤ 1, so no inelastic cap
    /// binds).
    Saturated { share: f64, speed: f64 },
    /// n < N and inelastic count ≥ ⌈δ·n⌉: inelastic at unit speed, elastic
    /// jobs split the residue equally.
    InelasticHeavy { elastic_speed: f64 },
    /// n < N and few inelastic: elastic jobs split all servers; inelastic idle.
    InelasticLight { elastic_speed: f64 },
}

pub(crate) fn pa_equi_plan(
    n: usize,
    n_elastic: usize,
    n_inelastic: usize,
    servers: f64,
    delta: f64,
    f: &Speedup,
) -> PaEquiPlan {
    let nf = n as f64;
    if nf >= servers {
        let share = servers / nf;
        PaEquiPlan::Saturated {
            share,
            speed: f.p(share),
        }
    } else if n_inelastic >= ceil_frac(delta, n) {
        let elastic_speed = if n_elastic > 0 {
            f.p((servers - n_inelastic as f64) / n_elastic as f64)
        } else {
            0.0
        };
        PaEquiPlan::InelasticHeavy { elastic_speed }
    } else {
        // n_ι < ⌈δ·n⌉ with δ < 1 forces at least one elastic job.
        let elastic_speed = if n_elastic > 0 {
            f.p(servers / n_elastic as f64)
        } else {
            0.0
        };
        PaEquiPlan::InelasticLight { elastic_speed }
    }
}

/// Unit-speed inelastic count and elastic speed for the inelastic-first rule.
pub(crate) fn inelastic_first_plan(
    n_elastic: usize,
    n_inelastic: usize,
    servers: f64,
    f: &Speedup,
) -> (usize, f64) {
    let c = n_inelastic.min(servers.floor() as usize);
    let residue = servers - c as f64;
    let elastic_speed = if n_elastic > 0 && residue > 0.0 {
        f.p(residue / n_elastic as f64)
    } else {
        0.0
    };
    (c, elastic_speed)
}

/// Per-job share and kind-capped speeds for the phase-blind equal split.
pub(crate) fn blind_equi_plan(n: usize, servers: f64, f: &Speedup) -> (f64, f64, f64) {
    let share = servers / n as f64;
    let elastic_speed = f.p(share);
    (share, elastic_speed, elastic_speed.min(1.0))
}

// ---------------------------------------------------------------------------
// Policy materializers
// ---------------------------------------------------------------------------

/// Recency-sharing policy: serves the ⌈β·n⌉ most recently arrived jobs,
/// switching to an inelastic-reserving split when the queue is short and
/// inelastic-heavy.
pub fn fractional_lcfs(
    snapshot: &SystemSnapshot,
    beta: f64,
    theta: f64,
    f: &Speedup,
) -> Result<Allocation, PolicyError> {
    validate_snapshot(snapshot)?;
    Policy::FractionalLcfs { beta, theta }.validate()?;
    let jobs = snapshot.jobs();
    let n = jobs.len();
    let n_i = snapshot.n_inelastic();
    let n_e = n - n_i;
    let servers = snapshot.servers;
    let mut alloc = Allocation::new();
    match lcfs_plan(n, n_e, n_i, servers, beta, theta, f) {
        LcfsPlan::Saturated { m, speed } => {
            let share = servers / m as f64;
            for job in &jobs[n - m..] {
                alloc.set(
                    job.id(),
                    ServerShare {
                        servers: share,
                        speed,
                    },
                );
            }
        }
        LcfsPlan::InelasticHeavy {
            c,
            m_e,
            elastic_speed,
        } => {
            let mut picked_i = 0;
            let mut picked_e = 0;
            for job in jobs.iter().rev() {
                match job.kind() {
                    Some(PhaseKind::Inelastic) if picked_i < c => {
                        picked_i += 1;
                        alloc.set(
                            job.id(),
                            ServerShare {
                                servers: 1.0,
                                speed: 1.0,
                            },
                        );
                    }
                    Some(PhaseKind::Elastic) if picked_e < m_e => {
                        picked_e += 1;
                        alloc.set(
                            job.id(),
                            ServerShare {
                                servers: (servers - c as f64) / m_e as f64,
                                speed: elastic_speed,
                            },
                        );
                    }
                    _ => {}
                }
            }
        }
        LcfsPlan::InelasticLight { m, speed } => {
            for job in &jobs[n - m..] {
                if job.kind() == Some(PhaseKind::Elastic) {
                    alloc.set(
                        job.id(),
                        ServerShare {
                            servers: servers / m as f64,
                            speed,
                        },
                    );
                }
            }
        }
    }
    Ok(alloc)
}

/// Phase-aware equal split across all active jobs.
pub fn pa_equi(
    snapshot: &SystemSnapshot,
    delta: f64,
    f: &Speedup,
) -> Result<Allocation, PolicyError> {
    validate_snapshot(snapshot)?;
    Policy::PaEqui { delta }.validate()?;
    let jobs = snapshot.jobs();
    let n = jobs.len();
    let n_i = snapshot.n_inelastic();
    let n_e = n - n_i;
    let servers = snapshot.servers;
    let mut alloc = Allocation::new();
    match pa_equi_plan(n, n_e, n_i, servers, delta, f) {
        PaEquiPlan::Saturated { share, speed } => {
            for job in jobs {
                let capped = if job.kind() == Some(PhaseKind::Inelastic) {
                    speed.min(1.0)
                } else {
                    speed
                };
                alloc.set(
                    job.id(),
                    ServerShare {
                        servers: share,
                        speed: capped,
                    },
                );
            }
        }
        PaEquiPlan::InelasticHeavy { elastic_speed } => {
            let e_share = if n_e > 0 {
                (servers - n_i as f64) / n_e as f64
            } else {
                0.0
            };
            for job in jobs {
                match job.kind() {
                    Some(PhaseKind::Inelastic) => alloc.set(
                        job.id(),
                        ServerShare {
                            servers: 1.0,
                            speed: 1.0,
                        },
                    ),
                    Some(PhaseKind::Elastic) => alloc.set(
                        job.id(),
                        ServerShare {
                            servers: e_share,
                            speed: elastic_speed,
                        },
                    ),
                    None => {}
                }
            }
        }
        PaEquiPlan::InelasticLight { elastic_speed } => {
            for job in jobs {
                if job.kind() == Some(PhaseKind::Elastic) {
                    alloc.set(
                        job.id(),
                        ServerShare {
                            servers: servers / n_e as f64,
                            speed: elastic_speed,
                        },
                    );
                }
            }
        }
    }
    Ok(alloc)
}

/// Phase-blind equal split: every job gets N/n servers; inelastic jobs can
/// only use one of them, so their speed is capped and the excess is wasted.
pub fn blind_equi(snapshot: &SystemSnapshot, f: &Speedup) -> Result<Allocation, PolicyError> {
    validate_snapshot(snapshot)?;
    let jobs = snapshot.jobs();
    let (share, e_speed, i_speed) = blind_equi_plan(jobs.len(), snapshot.servers, f);
    let mut alloc = Allocation::new();
    for job in jobs {
        let speed = match job.kind() {
            Some(PhaseKind::Elastic) => e_speed,
            Some(PhaseKind::Inelastic) => i_speed,
            None => continue,
        };
        alloc.set(
            job.id(),
            ServerShare {
                servers: share,
                speed,
            },
        );
    }
    Ok(alloc)
}

/// Unit speed to the min(n_ι, ⌊N⌋) oldest inelastic jobs; the residue is
/// split equally across every elastic job.
pub fn inelastic_first(snapshot: &SystemSnapshot, f: &Speedup) -> Result<Allocation, PolicyError> {
    validate_snapshot(snapshot)?;
    let jobs = snapshot.jobs();
    let n_i = snapshot.n_inelastic();
    let n_e = jobs.len() - n_i;
    let servers = snapshot.servers;
    let (c, elastic_speed) = inelastic_first_plan(n_e, n_i, servers, f);
    let e_share = if n_e > 0 {
        (servers - c as f64) / n_e as f64
    } else {
        0.0
    };
    let mut alloc = Allocation::new();
    let mut picked_i = 0;
    for job in jobs {
        match job.kind() {
            Some(PhaseKind::Inelastic) if picked_i < c => {
                picked_i += 1;
                alloc.set(
                    job.id(),
                    ServerShare {
                        servers: 1.0,
                        speed: 1.0,
                    },
                );
            }
            Some(PhaseKind::Elastic) if elastic_speed > 0.0 => {
                alloc.set(
                    job.id(),
                    ServerShare {
                        servers: e_share,
                        speed: elastic_speed,
                    },
                );
            }
            _ => {}
        }
    }
    Ok(alloc)
}

/// FCFS capacity scan: walk jobs oldest-first with remaining capacity R
/// (initially N). An inelastic job takes one server at unit speed while
/// R ≥ 1, otherwise the last R servers at P(R); an elastic job takes all of
/// R at P(R). Jobs reached after capacity is exhausted get nothing.
pub fn pa_fcfs(snapshot: &SystemSnapshot, f: &Speedup) -> Result<Allocation, PolicyError> {
    validate_snapshot(snapshot)?;
    let mut remaining = snapshot.servers;
    let mut alloc = Allocation::new();
    for job in snapshot.jobs() {
        if remaining <= 0.0 {
            break;
        }
        match job.kind() {
            Some(PhaseKind::Inelastic) => {
                if remaining >= 1.0 {
                    remaining -= 1.0;
                    alloc.set(
                        job.id(),
                        ServerShare {
                            servers: 1.0,
                            speed: 1.0,
                        },
                    );
                } else {
                    alloc.set(
                        job.id(),
                        ServerShare {
                            servers: remaining,
                            speed: f.p(remaining).min(1.0),
                        },
                    );
                    remaining = 0.0;
                }
            }
            Some(PhaseKind::Elastic) => {
                alloc.set(
                    job.id(),
                    ServerShare {
                        servers: remaining,
                        speed: f.p(remaining),
                    },
                );
                remaining = 0.0;
            }
            None => {}
        }
    }
    Ok(alloc)
}

/// Checks an allocation against the capacity constraint Σ P⁻¹(s_j) ≤ N and
/// the unit-speed cap on inelastic jobs. Errors if an entry references a job
/// that is not active in the snapshot.
pub fn check_feasible(
    alloc: &Allocation,
    snapshot: &SystemSnapshot,
    f: &Speedup,
) -> Result<bool, PolicyError> {
    let mut used = 0.0;
    for (id, share) in alloc.iter() {
        let job = snapshot.job(id).ok_or(PolicyError::InactiveJob(id))?;
        used += f.p_inv(share.speed);
        if job.kind() == Some(PhaseKind::Inelastic)
            && share.speed > 1.0 + tolerance::CAPACITY_REL
        {
            return Ok(false);
        }
    }
    Ok(used <= snapshot.servers * (1.0 + tolerance::CAPACITY_REL))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{JobSpec, JobState, PhaseSpec};
    use std::sync::Arc;

    fn job(id: u64, arrival: f64, kind: PhaseKind) -> JobState {
        JobState::new(Arc::new(JobSpec {
            id,
            arrival,
            phases: vec![PhaseSpec { kind, size: 10.0 }],
        }))
    }

    fn snap(servers: f64, kinds: &[PhaseKind]) -> SystemSnapshot {
        let jobs = kinds
            .iter()
            .enumerate()
            .map(|(i, &k)| job(i as u64, i as f64, k))
            .collect();
        SystemSnapshot::new(0.0, servers, jobs)
    }

    #[test]
    fn params_validated() {
        assert!(Policy::FractionalLcfs {
            beta: 1.0,
            theta: 0.25
        }
        .validate()
        .is_ok());
        assert!(Policy::FractionalLcfs {
            beta: 1.1,
            theta: 0.25
        }
        .validate()
        .is_err());
        assert!(Policy::FractionalLcfs {
            beta: 0.5,
            theta: 0.5
        }
        .validate()
        .is_err());
        assert!(Policy::PaEqui { delta: 1.0 }.validate().is_err());
        assert!(Policy::PaEqui { delta: 0.25 }.validate().is_ok());
    }

    #[test]
    fn policies_reject_empty_snapshot() {
        let f = Speedup::new(2.0).unwrap();
        let empty = SystemSnapshot::new(0.0, 4.0, vec![]);
        assert_eq!(
            fractional_lcfs(&empty, 0.5, 0.25, &f),
            Err(PolicyError::EmptySnapshot)
        );
        assert_eq!(pa_fcfs(&empty, &f), Err(PolicyError::EmptySnapshot));
    }

    #[test]
    fn feasibility_flags_overload_and_inactive_jobs() {
        let f = Speedup::new(2.0).unwrap();
        let s = snap(4.0, &[PhaseKind::Elastic, PhaseKind::Elastic]);
        let mut bad = Allocation::new();
        // Two elastic jobs at speed √N each would need 2N servers.
        bad.set(
            0,
            ServerShare {
                servers: 4.0,
                speed: 2.0,
            },
        );
        bad.set(
            1,
            ServerShare {
                servers: 4.0,
                speed: 2.0,
            },
        );
        assert_eq!(check_feasible(&bad, &s, &f), Ok(false));

        let mut stranger = Allocation::new();
        stranger.set(
            99,
            ServerShare {
                servers: 1.0,
                speed: 1.0,
            },
        );
        assert_eq!(
            check_feasible(&stranger, &s, &f),
            Err(PolicyError::InactiveJob(99))
        );

        let s1 = snap(4.0, &[PhaseKind::Inelastic]);
        let mut overspeed = Allocation::new();
        overspeed.set(
            0,
            ServerShare {
                servers: 2.0,
                speed: 1.5,
            },
        );
        assert_eq!(check_feasible(&overspeed, &s1, &f), Ok(false));
    }
}
