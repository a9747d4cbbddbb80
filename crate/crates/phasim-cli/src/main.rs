//! Command-line harness for the scheduling simulator and its analysis
//! toolkit.
//!
//! Subcommands: `simulate` (replicated experiment from a JSON config),
//! `sweep` (one experiment per value of a swept knob), `bounds`
//! (competitive-ratio bound calculators), `verify` (potential jump/drift
//! checks along a pair of traces), and `oracle` (exhaustive optimal search
//! on tiny instances). Data goes to `--out` or standard output; progress
//! goes to standard error. Exit codes: 0 success, 1 invalid input, 2
//! runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::atomic::{AtomicU32, Ordering};

use anyhow::{anyhow, Context};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use phasim::analysis::{
    best_equi_delta, brute_force_opt, check_conditions, empirical_ratio, equi_bound, equi_weights,
    lcfs_bound, opt_lower_bound, search_beta, verify_drifts, verify_jumps, AnalysisError,
    DriftCase, PotentialKind,
};
use phasim::engine::{run, RecordLevel, Trace};
use phasim::experiment::{
    emit, render, run_experiment_with_progress, sweep_with_progress, ExperimentConfig,
    ExperimentError, OutputFormat, SweepDimension,
};
use phasim::model::JobSpec;
use phasim::workload::{generate_stochastic, load_jobs, FirstPhase, StochasticConfig};
use phasim::{Policy, Speedup};

const VALIDATION: u8 = 1;
const RUNTIME: u8 = 2;

#[derive(Parser)]
#[command(
    name = "phasim",
    version,
    about = "Simulator and analysis toolkit for multi-phase parallel job scheduling"
)]
struct Cli {
    /// JSON experiment configuration (required by simulate and sweep).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configuration's base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write data here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format for data.
    #[arg(long, global = true, default_value = "csv")]
    format: OutputFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the replicated experiment described by --config.
    Simulate,
    /// Run the experiment once per value of a swept dimension.
    Sweep {
        /// arrival_rate, beta, or servers.
        #[arg(long)]
        dimension: SweepDimension,
        /// Comma-separated values to sweep over.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Competitive-ratio bound calculators.
    Bounds(BoundsArgs),
    /// Potential jump/drift checks along a pair of traces.
    Verify(VerifyArgs),
    /// Exhaustive optimal-schedule search for tiny instances.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct BoundsArgs {
    /// Speedup-curve exponent; must exceed 1.
    #[arg(long)]
    alpha: f64,
    /// Evaluate the recency-sharing bound at this recency fraction.
    #[arg(long)]
    beta: Option<f64>,
    /// Inelastic-queue threshold (defaults to beta²/2 when --beta is set).
    #[arg(long)]
    theta: Option<f64>,
    /// Comparison-queue fraction (defaults to beta²/2 when --beta is set).
    #[arg(long)]
    gamma: Option<f64>,
    /// Evaluate the equal-split bound at this reservation threshold.
    #[arg(long)]
    delta: Option<f64>,
    /// Search for the largest feasible recency fraction.
    #[arg(long)]
    search_beta: bool,
    /// Search for the reservation threshold minimizing the equal-split bound.
    #[arg(long)]
    best_delta: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// online (arrivals over time) or time_zero (batch at time 0).
    #[arg(long, default_value = "online")]
    case: VerifyCase,
    /// Job file to verify on; a stochastic workload is generated otherwise.
    #[arg(long)]
    workload: Option<PathBuf>,
    #[arg(long, default_value_t = 4.0)]
    servers: f64,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    /// Recency fraction of the algorithm under test (online case).
    #[arg(long, default_value_t = 1.0 / 6.0)]
    beta: f64,
    /// Inelastic-queue threshold of the algorithm under test (online case).
    #[arg(long, default_value_t = 1.0 / 72.0)]
    theta: f64,
    /// Comparison-queue fraction for drift applicability (online case).
    #[arg(long, default_value_t = 1.0 / 72.0)]
    gamma: f64,
    /// Reservation threshold of the algorithm under test (time_zero case).
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    /// Comparison policy: pa_equi, blind_equi, inelastic_first, or pa_fcfs.
    #[arg(long, default_value = "inelastic_first")]
    comparison: String,
    /// Mean arrivals per slot for the generated workload.
    #[arg(long, default_value_t = 2.0)]
    arrival_rate: f64,
    /// Arrival slots for the generated workload.
    #[arg(long, default_value_t = 20)]
    slots: u64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum VerifyCase {
    Online,
    TimeZero,
}

impl FromStr for VerifyCase {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "online" => Ok(VerifyCase::Online),
            "time_zero" => Ok(VerifyCase::TimeZero),
            other => Err(format!(
                "unknown case {other:?}; expected online or time_zero"
            )),
        }
    }
}

#[derive(Args)]
struct OracleArgs {
    /// Job file holding the tiny instance (at most 3 jobs).
    #[arg(long)]
    workload: PathBuf,
    #[arg(long)]
    servers: f64,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    /// Share quantum; the server count must be a multiple of it.
    #[arg(long, default_value_t = 0.5)]
    grid: f64,
    /// Reallocation period; every arrival must be a multiple of it.
    #[arg(long, default_value_t = 0.25)]
    dt: f64,
    /// Also run this policy and report its flow against the lower bound.
    #[arg(long)]
    policy: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.25)]
    theta: f64,
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
}

/// An error already classified into an exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

type CliResult<T> = Result<T, Failure>;

fn invalid(error: anyhow::Error) -> Failure {
    Failure {
        code: VALIDATION,
        error,
    }
}

fn runtime(error: anyhow::Error) -> Failure {
    Failure {
        code: RUNTIME,
        error,
    }
}

fn classify_experiment(err: ExperimentError) -> Failure {
    let code = match &err {
        ExperimentError::InvalidConfig(_)
        | ExperimentError::Workload(_)
        | ExperimentError::Policy(_)
        | ExperimentError::Model(_) => VALIDATION,
        ExperimentError::Engine { .. }
        | ExperimentError::Io(_)
        | ExperimentError::Csv(_)
        | ExperimentError::Json(_) => RUNTIME,
    };
    Failure {
        code,
        error: err.into(),
    }
}

fn classify_analysis(err: AnalysisError) -> Failure {
    let code = match &err {
        AnalysisError::SearchBudget(_) | AnalysisError::InfeasibleComparison { .. } => RUNTIME,
        _ => VALIDATION,
    };
    Failure {
        code,
        error: err.into(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => VALIDATION,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Simulate => simulate(&cli, None),
        Command::Sweep { dimension, values } => simulate(&cli, Some((*dimension, values.clone()))),
        Command::Bounds(args) => bounds(&cli, args),
        Command::Verify(args) => verify(&cli, args),
        Command::Oracle(args) => oracle(&cli, args),
    }
}

fn load_config(cli: &Cli) -> CliResult<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| invalid(anyhow!("--config <path> is required for this subcommand")))?;
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(invalid)?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))
        .map_err(invalid)?;
    if let Some(seed) = cli.seed {
        cfg.base_seed = seed;
    }
    cfg.validate().map_err(classify_experiment)?;
    Ok(cfg)
}

fn write_data(cli: &Cli, data: &str) -> CliResult<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, data)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(runtime),
        None => {
            print!("{data}");
            Ok(())
        }
    }
}

fn simulate(cli: &Cli, sweep_spec: Option<(SweepDimension, Vec<f64>)>) -> CliResult<()> {
    let cfg = load_config(cli)?;
    let points = sweep_spec.as_ref().map_or(1, |(_, v)| v.len()) as u32;
    let total = cfg.replications * points.max(1);
    let done = AtomicU32::new(0);
    let progress = |_r: u32| {
        let k = done.fetch_add(1, Ordering::Relaxed) + 1;
        eprintln!("replication {k}/{total} complete");
    };
    let rows = match sweep_spec {
        None => run_experiment_with_progress(&cfg, &progress),
        Some((dimension, values)) => sweep_with_progress(&cfg, dimension, &values, &progress),
    }
    .map_err(classify_experiment)?;
    match &cli.out {
        Some(path) => emit(&rows, cli.format, path).map_err(classify_experiment),
        None => {
            let text = render(&rows, cli.format).map_err(classify_experiment)?;
            print!("{text}");
            Ok(())
        }
    }
}

fn bounds(cli: &Cli, args: &BoundsArgs) -> CliResult<()> {
    let mut doc = serde_json::Map::new();
    doc.insert("alpha".into(), args.alpha.into());
    if let Some(beta) = args.beta {
        let theta = args.theta.unwrap_or(beta * beta / 2.0);
        let gamma = args.gamma.unwrap_or(beta * beta / 2.0);
        let conditions =
            check_conditions(args.alpha, beta, theta, gamma).map_err(classify_analysis)?;
        let bound = lcfs_bound(args.alpha, beta, theta, gamma).map_err(classify_analysis)?;
        doc.insert(
            "recency_conditions".into(),
            serde_json::to_value(&conditions).map_err(|e| runtime(e.into()))?,
        );
        doc.insert(
            "recency_bound".into(),
            serde_json::to_value(&bound).map_err(|e| runtime(e.into()))?,
        );
    }
    if let Some(delta) = args.delta {
        let mu = equi_bound(args.alpha, delta).map_err(classify_analysis)?;
        let (c1, c2) = equi_weights(args.alpha, delta).map_err(classify_analysis)?;
        doc.insert(
            "equal_split_bound".into(),
            serde_json::json!({ "delta": delta, "mu": mu, "c1": c1, "c2": c2 }),
        );
    }
    if args.search_beta {
        let (beta, theta, gamma) = search_beta(args.alpha).map_err(classify_analysis)?;
        let bound = lcfs_bound(args.alpha, beta, theta, gamma).map_err(classify_analysis)?;
        doc.insert(
            "search_beta".into(),
            serde_json::to_value(&bound).map_err(|e| runtime(e.into()))?,
        );
    }
    if args.best_delta {
        let (delta, mu) = best_equi_delta(args.alpha).map_err(classify_analysis)?;
        doc.insert(
            "best_delta".into(),
            serde_json::json!({ "delta": delta, "mu": mu }),
        );
    }
    if doc.len() == 1 {
        return Err(invalid(anyhow!(
            "nothing to compute: pass --beta, --delta, --search-beta, or --best-delta"
        )));
    }
    let value = serde_json::Value::Object(doc);
    let text = match cli.format {
        OutputFormat::Json => serde_json::to_string_pretty(&value)
            .map_err(|e| runtime(e.into()))?
            + "\n",
        OutputFormat::Csv => flatten_csv(&value),
    };
    write_data(cli, &text)
}

/// Renders a JSON document as `name,value` CSV rows with dotted paths.
fn flatten_csv(value: &serde_json::Value) -> String {
    fn walk(prefix: &str, value: &serde_json::Value, out: &mut String) {
        match value {
            serde_json::Value::Object(map) => {
                for (key, child) in map {
                    let path = if prefix.is_empty() {
                        key.clone()
                    } else {
                        format!("{prefix}.{key}")
                    };
                    walk(&path, child, out);
                }
            }
            serde_json::Value::Array(items) => {
                for (i, child) in items.iter().enumerate() {
                    walk(&format!("{prefix}.{i}"), child, out);
                }
            }
            leaf => {
                out.push_str(prefix);
                out.push(',');
                match leaf {
                    serde_json::Value::String(s) => out.push_str(s),
                    other => out.push_str(&other.to_string()),
                }
                out.push('\n');
            }
        }
    }
    let mut out = String::from("name,value\n");
    walk("", value, &mut out);
    out
}

fn parse_comparison(args: &VerifyArgs) -> CliResult<Policy> {
    let policy = match args.comparison.as_str() {
        "pa_equi" => Policy::PaEqui { delta: args.delta },
        "blind_equi" => Policy::BlindEqui,
        "inelastic_first" => Policy::InelasticFirst,
        "pa_fcfs" => Policy::PaFcfs,
        "fractional_lcfs" => Policy::FractionalLcfs {
            beta: args.beta,
            theta: args.theta,
        },
        other => {
            return Err(invalid(anyhow!(
                "unknown comparison policy {other:?}; expected pa_equi, blind_equi, \
                 inelastic_first, pa_fcfs, or fractional_lcfs"
            )))
        }
    };
    policy.validate().map_err(|e| invalid(e.into()))?;
    Ok(policy)
}

fn verify_workload(cli: &Cli, args: &VerifyArgs) -> CliResult<Vec<JobSpec>> {
    let mut jobs = match &args.workload {
        Some(path) => load_jobs(path).map_err(|e| invalid(e.into()))?,
        None => generate_stochastic(&StochasticConfig {
            arrival_rate: args.arrival_rate,
            horizon_slots: args.slots,
            mean_phases: 3.0,
            mean_phase_size: 1.0,
            first_phase: FirstPhase::RandomEqual,
            seed: cli.seed.unwrap_or(27182818),
        })
        .map_err(|e| invalid(e.into()))?,
    };
    if args.case == VerifyCase::TimeZero {
        for job in &mut jobs {
            job.arrival = 0.0;
        }
    }
    Ok(jobs)
}

fn verify(cli: &Cli, args: &VerifyArgs) -> CliResult<()> {
    let f = Speedup::new(args.alpha).map_err(|e| invalid(e.into()))?;
    let jobs = verify_workload(cli, args)?;
    if jobs.is_empty() {
        return Err(invalid(anyhow!(
            "verification needs at least one job; the generated workload was empty"
        )));
    }

    let (algorithm, kind, case, c1, c2) = match args.case {
        VerifyCase::Online => {
            let conditions = check_conditions(args.alpha, args.beta, args.theta, args.gamma)
                .map_err(classify_analysis)?;
            let (c1, c2) = match (conditions.min_c1, conditions.min_c2) {
                (Some(c1), Some(c2)) => (c1, c2),
                _ => {
                    return Err(invalid(anyhow!(
                        "parameters alpha={} beta={} theta={} gamma={} violate the weighting \
                         conditions; pick a feasible combination (try --search-beta)",
                        args.alpha,
                        args.beta,
                        args.theta,
                        args.gamma
                    )))
                }
            };
            (
                Policy::FractionalLcfs {
                    beta: args.beta,
                    theta: args.theta,
                },
                PotentialKind::OnlineArrival,
                DriftCase::OnlineArrival {
                    beta: args.beta,
                    theta: args.theta,
                    gamma: args.gamma,
                },
                c1,
                c2,
            )
        }
        VerifyCase::TimeZero => {
            let (c1, c2) = equi_weights(args.alpha, args.delta).map_err(classify_analysis)?;
            (
                Policy::PaEqui { delta: args.delta },
                PotentialKind::TimeZero,
                DriftCase::TimeZero { delta: args.delta },
                c1,
                c2,
            )
        }
    };
    let comparison = parse_comparison(args)?;

    eprintln!(
        "running {} and {} on {} jobs (N={})",
        algorithm.label(),
        comparison.label(),
        jobs.len(),
        args.servers
    );
    let run_full = |policy: &Policy| -> CliResult<Trace> {
        run(&jobs, policy, args.servers, &f, RecordLevel::Full)
            .map_err(|e| runtime(anyhow::Error::from(e).context(format!("running {}", policy.label()))))
    };
    let trace_alg = run_full(&algorithm)?;
    let trace_cmp = run_full(&comparison)?;

    let jumps =
        verify_jumps(&trace_alg, &trace_cmp, c1, c2, kind, &f).map_err(classify_analysis)?;
    let drifts =
        verify_drifts(&trace_alg, &trace_cmp, c1, c2, &case, &f).map_err(classify_analysis)?;

    eprintln!(
        "jumps: {} ({} events, max upward jump {:.3e}); drifts: {} ({} rows, worst margin {:.3e})",
        if jumps.pass { "pass" } else { "FAIL" },
        jumps.checks.len(),
        jumps.max_jump,
        if drifts.pass { "pass" } else { "FAIL" },
        drifts.rows.len(),
        drifts.worst_margin
    );

    let text = match cli.format {
        OutputFormat::Csv => drifts.to_csv(),
        OutputFormat::Json => {
            let doc = serde_json::json!({
                "case": match args.case {
                    VerifyCase::Online => "online",
                    VerifyCase::TimeZero => "time_zero",
                },
                "algorithm": algorithm.label(),
                "comparison": comparison.label(),
                "c1": c1,
                "c2": c2,
                "jumps": {
                    "pass": jumps.pass,
                    "events": jumps.checks.len(),
                    "max_jump": jumps.max_jump,
                    "initial_phi": jumps.initial_phi,
                    "final_phi": jumps.final_phi,
                },
                "drifts": {
                    "pass": drifts.pass,
                    "rows": drifts.rows.len(),
                    "worst_margin": drifts.worst_margin,
                },
            });
            serde_json::to_string_pretty(&doc).map_err(|e| runtime(e.into()))? + "\n"
        }
    };
    write_data(cli, &text)
}

fn oracle(cli: &Cli, args: &OracleArgs) -> CliResult<()> {
    let f = Speedup::new(args.alpha).map_err(|e| invalid(e.into()))?;
    let jobs = load_jobs(&args.workload).map_err(|e| invalid(e.into()))?;
    eprintln!(
        "searching schedules for {} jobs (N={}, grid={}, dt={})",
        jobs.len(),
        args.servers,
        args.grid,
        args.dt
    );
    let best = brute_force_opt(&jobs, args.servers, &f, args.grid, args.dt)
        .map_err(classify_analysis)?;
    let lower = opt_lower_bound(&jobs, args.servers, &f).map_err(classify_analysis)?;

    let mut doc = serde_json::Map::new();
    doc.insert("jobs".into(), jobs.len().into());
    doc.insert("flow_time".into(), best.flow_time.into());
    doc.insert("slack".into(), best.slack.into());
    doc.insert("lower_bound".into(), lower.into());

    if let Some(label) = &args.policy {
        let policy = match label.as_str() {
            "fractional_lcfs" => Policy::FractionalLcfs {
                beta: args.beta,
                theta: args.theta,
            },
            "pa_equi" => Policy::PaEqui { delta: args.delta },
            "blind_equi" => Policy::BlindEqui,
            "inelastic_first" => Policy::InelasticFirst,
            "pa_fcfs" => Policy::PaFcfs,
            other => {
                return Err(invalid(anyhow!("unknown policy {other:?}")));
            }
        };
        policy.validate().map_err(|e| invalid(e.into()))?;
        let trace = phasim::run_fast(&jobs, &policy, args.servers, &f)
            .map_err(|e| runtime(e.into()))?;
        let ratio =
            empirical_ratio(&trace, &jobs, args.servers, &f).map_err(classify_analysis)?;
        doc.insert("policy".into(), policy.label().into());
        doc.insert("policy_flow_time".into(), trace.flow_time.into());
        doc.insert("ratio_vs_lower_bound".into(), ratio.into());
    }

    let value = serde_json::Value::Object(doc);
    let text = match cli.format {
        OutputFormat::Json => serde_json::to_string_pretty(&value)
            .map_err(|e| runtime(e.into()))?
            + "\n",
        OutputFormat::Csv => flatten_csv(&value),
    };
    write_data(cli, &text)
}
