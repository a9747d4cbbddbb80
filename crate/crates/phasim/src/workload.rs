//! Workload generation and serialization.
//!
//! Two generators: a fully stochastic one (Poisson arrivals per unit slot,
//! Poisson phase counts truncated away from zero, exponential phase sizes)
//! and a profile one (Poisson arrivals, fixed phase-size list per job).
//! Phase kinds strictly alternate within a job, starting from a configured
//! first kind or a fair coin flip.
//!
//! Every workload is drawn from a single sequential ChaCha8 stream seeded by
//! the config's `seed`, with a fixed draw order (per slot: arrival count;
//! per job: phase count, first-kind coin when applicable; per phase: size).
//! The same seed therefore always reproduces the same workload bit for bit.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{JobSpec, ModelError, PhaseKind, PhaseSpec};

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("invalid workload parameter {name}={value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("workload file I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("workload JSON malformed: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// How the first phase of each generated job is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstPhase {
    /// Fair coin flip per job.
    RandomEqual,
    Elastic,
    Inelastic,
}

/// Poisson arrivals per unit time slot; Poisson phase counts (at least one);
/// exponential phase sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StochasticConfig {
    /// Expected arrivals per unit slot.
    pub arrival_rate: f64,
    /// Number of unit slots admitting arrivals; arrivals occur at integer
    /// times `0..horizon_slots`.
    pub horizon_slots: u64,
    /// Mean of the Poisson phase count before truncation to at least one.
    pub mean_phases: f64,
    /// Mean of the exponential phase size.
    pub mean_phase_size: f64,
    pub first_phase: FirstPhase,
    pub seed: u64,
}

/// Poisson arrivals per unit slot; every job carries the same fixed list of
/// phase sizes with kinds alternating from `first_phase`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub sizes: Vec<f64>,
    pub first_phase: FirstPhase,
    pub arrival_rate: f64,
    pub horizon_slots: u64,
    pub seed: u64,
}

impl StochasticConfig {
    fn validate(&self) -> Result<(), WorkloadError> {
        check_param("arrival_rate", self.arrival_rate, |v| v >= 0.0, "must be ≥ 0")?;
        check_param("mean_phases", self.mean_phases, |v| v > 0.0, "must be > 0")?;
        check_param(
            "mean_phase_size",
            self.mean_phase_size,
            |v| v > 0.0,
            "must be > 0",
        )
    }
}

impl ProfileConfig {
    fn validate(&self) -> Result<(), WorkloadError> {
        check_param("arrival_rate", self.arrival_rate, |v| v >= 0.0, "must be ≥ 0")?;
        if self.sizes.is_empty() {
            return Err(WorkloadError::InvalidParameter {
                name: "sizes",
                value: 0.0,
                reason: "must list at least one phase size",
            });
        }
        for &s in &self.sizes {
            check_param("sizes", s, |v| v > 0.0, "every phase size must be > 0")?;
        }
        Ok(())
    }
}

fn check_param(
    name: &'static str,
    value: f64,
    ok: impl Fn(f64) -> bool,
    reason: &'static str,
) -> Result<(), WorkloadError> {
    if value.is_finite() && ok(value) {
        Ok(())
    } else {
        Err(WorkloadError::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}

/// Per-slot arrival counter; a zero rate yields no arrivals (the Poisson
/// sampler itself rejects a zero mean).
enum ArrivalCounts {
    Zero,
    Poisson(Poisson<f64>),
}

impl ArrivalCounts {
    fn new(rate: f64) -> Result<Self, WorkloadError> {
        if rate == 0.0 {
            Ok(ArrivalCounts::Zero)
        } else {
            Poisson::new(rate)
                .map(ArrivalCounts::Poisson)
                .map_err(|_| WorkloadError::InvalidParameter {
                    name: "arrival_rate",
                    value: rate,
                    reason: "not a valid Poisson mean",
                })
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        match self {
            ArrivalCounts::Zero => 0,
            ArrivalCounts::Poisson(d) => d.sample(rng) as u64,
        }
    }
}

fn first_kind(choice: FirstPhase, rng: &mut ChaCha8Rng) -> PhaseKind {
    match choice {
        FirstPhase::Elastic => PhaseKind::Elastic,
        FirstPhase::Inelastic => PhaseKind::Inelastic,
        FirstPhase::RandomEqual => {
            if rng.gen::<bool>() {
                PhaseKind::Elastic
            } else {
                PhaseKind::Inelastic
            }
        }
    }
}

/// Draws a strictly positive exponential size (resampling the measure-zero
/// event of an exact zero, which the job model rejects).
fn positive_size(dist: &Exp<f64>, rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let s = dist.sample(rng);
        if s > 0.0 {
            return s;
        }
    }
}

/// Generates a stochastic workload; job ids are assigned sequentially in
/// arrival order starting from zero.
pub fn generate_stochastic(cfg: &StochasticConfig) -> Result<Vec<JobSpec>, WorkloadError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let arrivals = ArrivalCounts::new(cfg.arrival_rate)?;
    let phase_count = Poisson::new(cfg.mean_phases).map_err(|_| {
        WorkloadError::InvalidParameter {
            name: "mean_phases",
            value: cfg.mean_phases,
            reason: "not a valid Poisson mean",
        }
    })?;
    let size_dist = Exp::new(1.0 / cfg.mean_phase_size).map_err(|_| {
        WorkloadError::InvalidParameter {
            name: "mean_phase_size",
            value: cfg.mean_phase_size,
            reason: "not a valid exponential mean",
        }
    })?;

    let mut jobs = Vec::new();
    let mut id = 0u64;
    for slot in 0..cfg.horizon_slots {
        let count = arrivals.sample(&mut rng);
        for _ in 0..count {
            let phases_in_job = (phase_count.sample(&mut rng) as u64).max(1);
            let mut kind = first_kind(cfg.first_phase, &mut rng);
            let mut phases = Vec::with_capacity(phases_in_job as usize);
            for _ in 0..phases_in_job {
                phases.push(PhaseSpec {
                    kind,
                    size: positive_size(&size_dist, &mut rng),
                });
                kind = kind.other();
            }
            let job = JobSpec {
                id,
                arrival: slot as f64,
                phases,
            };
            job.validate()?;
            jobs.push(job);
            id += 1;
        }
    }
    Ok(jobs)
}

/// Generates a profile workload: arrivals are stochastic, phase sizes fixed.
pub fn generate_profile(cfg: &ProfileConfig) -> Result<Vec<JobSpec>, WorkloadError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let arrivals = ArrivalCounts::new(cfg.arrival_rate)?;

    let mut jobs = Vec::new();
    let mut id = 0u64;
    for slot in 0..cfg.horizon_slots {
        let count = arrivals.sample(&mut rng);
        for _ in 0..count {
            let mut kind = first_kind(cfg.first_phase, &mut rng);
            let mut phases = Vec::with_capacity(cfg.sizes.len());
            for &size in &cfg.sizes {
                phases.push(PhaseSpec { kind, size });
                kind = kind.other();
            }
            let job = JobSpec {
                id,
                arrival: slot as f64,
                phases,
            };
            job.validate()?;
            jobs.push(job);
            id += 1;
        }
    }
    Ok(jobs)
}

/// On-disk workload document.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct WorkloadFile {
    jobs: Vec<JobSpec>,
}

/// Serializes jobs to the JSON workload format.
pub fn to_json(jobs: &[JobSpec]) -> Result<String, WorkloadError> {
    let doc = WorkloadFile {
        jobs: jobs.to_vec(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Parses and validates a JSON workload document.
pub fn from_json(text: &str) -> Result<Vec<JobSpec>, WorkloadError> {
    let doc: WorkloadFile = serde_json::from_str(text)?;
    for job in &doc.jobs {
        job.validate()?;
    }
    Ok(doc.jobs)
}

pub fn save_jobs(path: &Path, jobs: &[JobSpec]) -> Result<(), WorkloadError> {
    fs::write(path, to_json(jobs)?)?;
    Ok(())
}

pub fn load_jobs(path: &Path) -> Result<Vec<JobSpec>, WorkloadError> {
    from_json(&fs::read_to_string(path)?)
}
