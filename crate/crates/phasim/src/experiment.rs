//! Replicated simulation experiments: seed management, paired policy runs,
//! aggregation into per-policy statistics, and CSV/JSON output.
//!
//! Each replication draws one workload from `(base_seed, replication)` and
//! runs **every** configured policy on that identical workload, so
//! policy-to-policy comparisons are paired and adding a policy never changes
//! another's numbers. Results are keyed by replication index, making the
//! output independent of worker count.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{run_fast, EngineError};
use crate::model::{JobSpec, ModelError};
use crate::policy::{Policy, PolicyError};
use crate::rng::mix_seed;
use crate::speedup::Speedup;
use crate::workload::{
    generate_profile, generate_stochastic, load_jobs, ProfileConfig, StochasticConfig,
    WorkloadError,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("engine failure in replication {replication} (seed {seed}): {source}")]
    Engine {
        replication: u32,
        seed: u64,
        #[source]
        source: EngineError,
    },
    #[error("output I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV output: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON output: {0}")]
    Json(#[from] serde_json::Error),
}

/// Where each replication's jobs come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WorkloadSpec {
    /// Freshly sampled per replication; the configured seed is replaced by
    /// the replication's derived seed.
    Stochastic(StochasticConfig),
    /// Fixed phase profile with sampled arrivals, reseeded per replication.
    Profile(ProfileConfig),
    /// A fixed job list read from disk, identical across replications.
    File { path: PathBuf },
}

impl WorkloadSpec {
    /// Arrival rate used for reporting; absent for file workloads.
    pub fn arrival_rate(&self) -> Option<f64> {
        match self {
            WorkloadSpec::Stochastic(c) => Some(c.arrival_rate),
            WorkloadSpec::Profile(c) => Some(c.arrival_rate),
            WorkloadSpec::File { .. } => None,
        }
    }
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub policies: Vec<Policy>,
    pub servers: f64,
    pub alpha: f64,
    pub workload: WorkloadSpec,
    pub replications: u32,
    pub base_seed: u64,
    /// Replications may run on up to this many threads; default 1.
    #[serde(default = "default_workers")]
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.replications < 1 {
            return Err(ExperimentError::InvalidConfig(
                "replications must be at least 1".into(),
            ));
        }
        if !self.servers.is_finite() || self.servers <= 0.0 {
            return Err(ExperimentError::InvalidConfig(format!(
                "servers must be positive and finite, got {}",
                self.servers
            )));
        }
        Speedup::new(self.alpha)?;
        for policy in &self.policies {
            policy.validate()?;
        }
        Ok(())
    }
}

/// Aggregated outcome for one policy at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyAggregate {
    pub policy: Policy,
    pub arrival_rate: Option<f64>,
    pub alpha: f64,
    pub servers: f64,
    /// Replications attempted (empty ones included).
    pub replications: u32,
    /// Jobs generated across all replications.
    pub jobs_total: u64,
    /// Mean over replications of each replication's per-job flow time;
    /// replications with zero jobs are excluded. NaN when none had jobs.
    pub mean_flow_time: f64,
    /// Sample standard deviation of the per-replication means.
    pub stddev: f64,
    /// Two-sided 95% half-width: 1.96·stddev/√(contributing replications).
    pub ci95: f64,
    /// Total flow over total jobs, pooled across replications.
    pub pooled_mean: f64,
    /// Per-replication per-job means, `None` where a replication was empty.
    /// Indexed by replication, so values are paired across policies.
    pub per_rep: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy)]
struct RepCell {
    jobs: u64,
    flow: f64,
}

fn replication_jobs(
    spec: &WorkloadSpec,
    file_jobs: Option<&[JobSpec]>,
    seed: u64,
) -> Result<Option<Vec<JobSpec>>, ExperimentError> {
    match spec {
        WorkloadSpec::Stochastic(c) => {
            let mut c = c.clone();
            c.seed = seed;
            Ok(Some(generate_stochastic(&c)?))
        }
        WorkloadSpec::Profile(c) => {
            let mut c = c.clone();
            c.seed = seed;
            Ok(Some(generate_profile(&c)?))
        }
        WorkloadSpec::File { .. } => {
            debug_assert!(file_jobs.is_some());
            Ok(None)
        }
    }
}

fn run_reps(
    cfg: &ExperimentConfig,
    f: &Speedup,
    file_jobs: Option<&[JobSpec]>,
    reps: &[u32],
    progress: &(dyn Fn(u32) + Sync),
) -> Result<Vec<(u32, Vec<RepCell>)>, ExperimentError> {
    let mut out = Vec::with_capacity(reps.len());
    for &r in reps {
        let seed = mix_seed(cfg.base_seed, u64::from(r));
        let generated = replication_jobs(&cfg.workload, file_jobs, seed)?;
        let jobs: &[JobSpec] = match (&generated, file_jobs) {
            (Some(g), _) => g,
            (None, Some(fixed)) => fixed,
            (None, None) => unreachable!("file workload loaded before the replication loop"),
        };
        let mut cells = Vec::with_capacity(cfg.policies.len());
        for policy in &cfg.policies {
            let trace = run_fast(jobs, policy, cfg.servers, f).map_err(|source| {
                ExperimentError::Engine {
                    replication: r,
                    seed,
                    source,
                }
            })?;
            cells.push(RepCell {
                jobs: jobs.len() as u64,
                flow: trace.flow_time,
            });
        }
        progress(r);
        out.push((r, cells));
    }
    Ok(out)
}

/// Runs the configured replications and aggregates per policy.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<PolicyAggregate>, ExperimentError> {
    run_experiment_with_progress(cfg, &|_| {})
}

/// [`run_experiment`] invoking `progress` with each replication index as it
/// finishes (possibly out of order when `workers > 1`).
pub fn run_experiment_with_progress(
    cfg: &ExperimentConfig,
    progress: &(dyn Fn(u32) + Sync),
) -> Result<Vec<PolicyAggregate>, ExperimentError> {
    cfg.validate()?;
    let f = Speedup::new(cfg.alpha)?;
    let file_jobs = match &cfg.workload {
        WorkloadSpec::File { path } => Some(load_jobs(path)?),
        _ => None,
    };
    let file_slice = file_jobs.as_deref();

    let reps: Vec<u32> = (0..cfg.replications).collect();
    let workers = cfg.workers.max(1).min(reps.len());
    let mut merged: Vec<(u32, Vec<RepCell>)> = if workers <= 1 {
        run_reps(cfg, &f, file_slice, &reps, progress)?
    } else {
        let chunk = reps.len().div_ceil(workers);
        let results: Vec<Result<Vec<(u32, Vec<RepCell>)>, ExperimentError>> =
            std::thread::scope(|s| {
                let handles: Vec<_> = reps
                    .chunks(chunk)
                    .map(|part| s.spawn(move || run_reps(cfg, &f, file_slice, part, progress)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("replication worker panicked"))
                    .collect()
            });
        let mut all = Vec::with_capacity(reps.len());
        for res in results {
            all.extend(res?);
        }
        all
    };
    merged.sort_unstable_by_key(|(r, _)| *r);

    let policies = cfg.policies.len();
    let total_reps = cfg.replications as usize;
    let mut per_rep = vec![vec![None; total_reps]; policies];
    let mut flow_sum = vec![0.0f64; policies];
    let mut jobs_sum = vec![0u64; policies];
    for (r, cells) in &merged {
        for (p, cell) in cells.iter().enumerate() {
            jobs_sum[p] += cell.jobs;
            flow_sum[p] += cell.flow;
            if cell.jobs > 0 {
                per_rep[p][*r as usize] = Some(cell.flow / cell.jobs as f64);
            }
        }
    }

    let arrival_rate = cfg.workload.arrival_rate();
    let mut rows = Vec::with_capacity(policies);
    for (p, policy) in cfg.policies.iter().enumerate() {
        let vals: Vec<f64> = per_rep[p].iter().flatten().copied().collect();
        let reff = vals.len();
        let mean = if reff > 0 {
            vals.iter().sum::<f64>() / reff as f64
        } else {
            f64::NAN
        };
        let stddev = if reff > 1 {
            (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reff - 1) as f64).sqrt()
        } else {
            0.0
        };
        let ci95 = if reff > 0 {
            1.96 * stddev / (reff as f64).sqrt()
        } else {
            0.0
        };
        let pooled_mean = if jobs_sum[p] > 0 {
            flow_sum[p] / jobs_sum[p] as f64
        } else {
            f64::NAN
        };
        rows.push(PolicyAggregate {
            policy: *policy,
            arrival_rate,
            alpha: cfg.alpha,
            servers: cfg.servers,
            replications: cfg.replications,
            jobs_total: jobs_sum[p],
            mean_flow_time: mean,
            stddev,
            ci95,
            pooled_mean,
            per_rep: std::mem::take(&mut per_rep[p]),
        });
    }
    Ok(rows)
}

/// Which configuration knob a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepDimension {
    ArrivalRate,
    Beta,
    Servers,
}

impl FromStr for SweepDimension {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "arrival_rate" => Ok(SweepDimension::ArrivalRate),
            "beta" => Ok(SweepDimension::Beta),
            "servers" => Ok(SweepDimension::Servers),
            other => Err(format!(
                "unknown sweep dimension {other:?}; expected arrival_rate, beta, or servers"
            )),
        }
    }
}

fn specialized(
    cfg: &ExperimentConfig,
    dimension: SweepDimension,
    value: f64,
) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = cfg.clone();
    match dimension {
        SweepDimension::ArrivalRate => match &mut cfg.workload {
            WorkloadSpec::Stochastic(c) => c.arrival_rate = value,
            WorkloadSpec::Profile(c) => c.arrival_rate = value,
            WorkloadSpec::File { .. } => {
                return Err(ExperimentError::InvalidConfig(
                    "arrival-rate sweeps need a generated workload, not a file".into(),
                ))
            }
        },
        SweepDimension::Beta => {
            for policy in &mut cfg.policies {
                if let Policy::FractionalLcfs { beta, .. } = policy {
                    *beta = value;
                }
            }
        }
        SweepDimension::Servers => cfg.servers = value,
    }
    Ok(cfg)
}

/// Runs [`run_experiment`] once per value, reusing `base_seed` so that all
/// sweep points see identical workload draws (paired comparisons).
pub fn sweep(
    cfg: &ExperimentConfig,
    dimension: SweepDimension,
    values: &[f64],
) -> Result<Vec<PolicyAggregate>, ExperimentError> {
    sweep_with_progress(cfg, dimension, values, &|_| {})
}

pub fn sweep_with_progress(
    cfg: &ExperimentConfig,
    dimension: SweepDimension,
    values: &[f64],
    progress: &(dyn Fn(u32) + Sync),
) -> Result<Vec<PolicyAggregate>, ExperimentError> {
    let mut rows = Vec::with_capacity(values.len() * cfg.policies.len());
    for &value in values {
        let point = specialized(cfg, dimension, value)?;
        rows.extend(run_experiment_with_progress(&point, progress)?);
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown output format {other:?}; expected csv or json")),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

pub const CSV_HEADER: [&str; 13] = [
    "policy",
    "beta",
    "theta",
    "delta",
    "alpha",
    "servers",
    "arrival_rate",
    "replications",
    "jobs_total",
    "mean_flow_time",
    "stddev",
    "ci95",
    "pooled_mean",
];

/// One serialized output row; field names mirror the CSV columns.
#[derive(Debug, Clone, Serialize)]
struct OutputRow<'a> {
    policy: &'a str,
    beta: Option<f64>,
    theta: Option<f64>,
    delta: Option<f64>,
    alpha: f64,
    servers: f64,
    arrival_rate: Option<f64>,
    replications: u32,
    jobs_total: u64,
    mean_flow_time: f64,
    stddev: f64,
    ci95: f64,
    pooled_mean: f64,
}

impl<'a> From<&'a PolicyAggregate> for OutputRow<'a> {
    fn from(agg: &'a PolicyAggregate) -> Self {
        OutputRow {
            policy: agg.policy.label(),
            beta: agg.policy.beta(),
            theta: agg.policy.theta(),
            delta: agg.policy.delta(),
            alpha: agg.alpha,
            servers: agg.servers,
            arrival_rate: agg.arrival_rate,
            replications: agg.replications,
            jobs_total: agg.jobs_total,
            mean_flow_time: agg.mean_flow_time,
            stddev: agg.stddev,
            ci95: agg.ci95,
            pooled_mean: agg.pooled_mean,
        }
    }
}

fn opt_field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Renders rows in the requested format; CSV always includes the header.
pub fn render(rows: &[PolicyAggregate], format: OutputFormat) -> Result<String, ExperimentError> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_HEADER)?;
            for agg in rows {
                let row = OutputRow::from(agg);
                w.write_record([
                    row.policy.to_string(),
                    opt_field(row.beta),
                    opt_field(row.theta),
                    opt_field(row.delta),
                    row.alpha.to_string(),
                    row.servers.to_string(),
                    opt_field(row.arrival_rate),
                    row.replications.to_string(),
                    row.jobs_total.to_string(),
                    row.mean_flow_time.to_string(),
                    row.stddev.to_string(),
                    row.ci95.to_string(),
                    row.pooled_mean.to_string(),
                ])?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| ExperimentError::Io(std::io::Error::other(e)))?;
            Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
        }
        OutputFormat::Json => {
            let rows: Vec<OutputRow> = rows.iter().map(OutputRow::from).collect();
            Ok(serde_json::to_string_pretty(&rows)? + "\n")
        }
    }
}

/// Writes rendered rows to `path`.
pub fn emit(
    rows: &[PolicyAggregate],
    format: OutputFormat,
    path: &Path,
) -> Result<(), ExperimentError> {
    std::fs::write(path, render(rows, format)?)?;
    Ok(())
}
