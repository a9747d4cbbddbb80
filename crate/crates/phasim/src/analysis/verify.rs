//! Numeric verification of the potential function's event-jump and
//! inter-event-drift properties along recorded trace pairs.
//!
//! Both checks replay fully-recorded traces: between consecutive events an
//! allocation is constant, so any instant's per-job remaining work follows
//! from the most recent interval record. Jumps compare the potential just
//! before and just after every arrival/departure; drifts measure the
//! potential's rate of change over each inter-event interval attributed to
//! one side at a time (advance one schedule, freeze the other) and compare
//! it against the side's closed-form bound.

use std::collections::HashSet;

use super::potential::{eval_potential, RankConvention, Remnant};
use super::AnalysisError;
use crate::engine::{EventKind, IntervalRecord, Trace};
use crate::policy::{check_feasible, lcfs_plan, pa_equi_plan, LcfsPlan, PaEquiPlan};
use crate::speedup::Speedup;
use crate::tolerance;

/// Which potential a jump check evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    /// Rank-weighted lag potential for workloads with arrivals over time.
    OnlineArrival,
    /// Batch potential for workloads where every job is present at time 0.
    TimeZero,
}

/// One before/after potential comparison around an event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpCheck {
    pub time: f64,
    pub job: u64,
    pub event: EventKind,
    pub phi_before: f64,
    pub phi_after: f64,
    pub jump: f64,
    pub allowed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpReport {
    pub kind: PotentialKind,
    pub checks: Vec<JumpCheck>,
    /// Largest upward jump observed (0 when none).
    pub max_jump: f64,
    pub pass: bool,
    /// Potential just before the first event (must be 0).
    pub initial_phi: f64,
    /// Potential just after the last completion (must be 0).
    pub final_phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftSide {
    Algorithm,
    Comparison,
}

impl DriftSide {
    pub fn label(&self) -> &'static str {
        match self {
            DriftSide::Algorithm => "algorithm",
            DriftSide::Comparison => "comparison",
        }
    }
}

/// Which drift bound family applies, with the parameters its bounds need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftCase {
    /// Online-arrival potential along a last-come-first-served trace.
    OnlineArrival { beta: f64, theta: f64, gamma: f64 },
    /// Time-zero potential along an equal-split trace.
    TimeZero { delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftRow {
    pub interval_start: f64,
    pub interval_end: f64,
    pub side: DriftSide,
    /// Measured ΔΦ/Δt with only this side's processing applied.
    pub drift: f64,
    /// Closed-form bound for this side on this interval.
    pub bound: f64,
    /// bound − drift; positive means satisfied with room.
    pub margin: f64,
    /// Whether the side's bound is claimed on this interval.
    pub applicable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub rows: Vec<DriftRow>,
    /// Smallest margin over applicable rows (+∞ when none).
    pub worst_margin: f64,
    pub pass: bool,
}

impl DriftReport {
    /// Renders the per-interval findings as CSV.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("interval_start,interval_end,side,drift,bound,margin,applicable\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.interval_start,
                row.interval_end,
                row.side.label(),
                row.drift,
                row.bound,
                row.margin,
                row.applicable
            ));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Trace replay
// ---------------------------------------------------------------------------

struct Replay<'a> {
    records: &'a [IntervalRecord],
}

impl<'a> Replay<'a> {
    fn new(trace: &'a Trace) -> Result<Self, AnalysisError> {
        trace
            .intervals
            .as_deref()
            .map(|records| Replay { records })
            .ok_or(AnalysisError::MissingIntervals)
    }

    fn servers(&self) -> Option<f64> {
        self.records.first().map(|r| r.snapshot.servers)
    }

    /// Per-job remaining work at time `t`. With `after`, events at exactly
    /// `t` are considered applied; otherwise the state just before them is
    /// reconstructed (a job completing exactly at `t` is retained with
    /// vanishing remaining work so that rank structure is preserved).
    fn remnants_at(&self, t: f64, after: bool) -> Vec<Remnant> {
        let idx = if after {
            self.records.partition_point(|r| r.start <= t)
        } else {
            self.records.partition_point(|r| r.start < t)
        };
        if idx == 0 {
            return Vec::new();
        }
        let rec = &self.records[idx - 1];
        let dt = t - rec.start;
        let mut out = Vec::with_capacity(rec.snapshot.n());
        for job in rec.snapshot.jobs() {
            let Some(kind) = job.kind() else { continue };
            let work = rec.allocation.speed(job.id()) * dt;
            let total = job.remaining_total();
            if work >= total - tolerance::WORK_ABS {
                // The job runs out within [rec.start, t].
                if after || work > total + tolerance::WORK_ABS {
                    continue;
                }
                // It vanishes exactly at t and we want the pre-event view.
            }
            let rem_total = (total - work).max(0.0);
            let rem_inelastic = if kind == crate::model::PhaseKind::Inelastic {
                (job.remaining_inelastic() - work).max(0.0)
            } else {
                job.remaining_inelastic()
            }
            .min(rem_total);
            out.push(Remnant {
                id: job.id(),
                rem_total,
                rem_inelastic,
                kind,
            });
        }
        out
    }
}

fn arrival_signature(trace: &Trace) -> Vec<(u64, u64)> {
    let mut v: Vec<(u64, u64)> = trace
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Arrival)
        .map(|e| (e.job, e.time.to_bits()))
        .collect();
    v.sort_unstable();
    v
}

fn require_same_workload(a: &Trace, b: &Trace) -> Result<(), AnalysisError> {
    if arrival_signature(a) == arrival_signature(b) {
        Ok(())
    } else {
        Err(AnalysisError::MismatchedWorkloads)
    }
}

fn require_time_zero(trace: &Trace) -> Result<(), AnalysisError> {
    for e in &trace.events {
        if e.kind == EventKind::Arrival && e.time != 0.0 {
            return Err(AnalysisError::PositiveArrival {
                job: e.job,
                arrival: e.time,
            });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Jump verification
// ---------------------------------------------------------------------------

/// Checks that the selected potential never jumps upward across any arrival
/// or departure in either trace (beyond rounding tolerance).
pub fn verify_jumps(
    trace_alg: &Trace,
    trace_cmp: &Trace,
    c1: f64,
    c2: f64,
    kind: PotentialKind,
    f: &Speedup,
) -> Result<JumpReport, AnalysisError> {
    verify_jumps_inner(trace_alg, trace_cmp, c1, c2, kind, f, RankConvention::OldestFirst)
}

/// [`verify_jumps`] with an explicit rank convention for the online-arrival
/// potential. Exists so the harness can be fed a deliberately wrong
/// evaluator (`NewestFirst`) and be seen to flag it; not for production use.
pub fn verify_jumps_with_ranks(
    trace_alg: &Trace,
    trace_cmp: &Trace,
    c1: f64,
    c2: f64,
    f: &Speedup,
    ranks: RankConvention,
) -> Result<JumpReport, AnalysisError> {
    verify_jumps_inner(
        trace_alg,
        trace_cmp,
        c1,
        c2,
        PotentialKind::OnlineArrival,
        f,
        ranks,
    )
}

fn verify_jumps_inner(
    trace_alg: &Trace,
    trace_cmp: &Trace,
    c1: f64,
    c2: f64,
    kind: PotentialKind,
    f: &Speedup,
    ranks: RankConvention,
) -> Result<JumpReport, AnalysisError> {
    require_same_workload(trace_alg, trace_cmp)?;
    if kind == PotentialKind::TimeZero {
        require_time_zero(trace_alg)?;
    }
    let alg = Replay::new(trace_alg)?;
    let cmp = Replay::new(trace_cmp)?;
    let servers = alg.servers().or(cmp.servers()).unwrap_or(1.0);

    let select = |e: &super::PotentialEval| match kind {
        PotentialKind::OnlineArrival => e.phi_total,
        PotentialKind::TimeZero => e.phi_sf_total,
    };
    let eval = |t: f64, after: bool| {
        let a = alg.remnants_at(t, after);
        let c = cmp.remnants_at(t, after);
        select(&eval_potential(&a, &c, t, servers, c1, c2, f, ranks))
    };

    // Every arrival/departure instant in either trace, deduplicated.
    let mut seen = HashSet::new();
    let mut moments: Vec<(f64, u64, EventKind)> = Vec::new();
    for e in trace_alg.events.iter().chain(&trace_cmp.events) {
        if e.kind == EventKind::PhaseCompletion {
            continue;
        }
        if seen.insert((e.time.to_bits(), e.job, e.kind)) {
            moments.push((e.time, e.job, e.kind));
        }
    }
    moments.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut checks = Vec::with_capacity(moments.len());
    let mut max_jump = 0.0f64;
    let mut pass = true;
    for (time, job, event) in moments {
        let phi_before = eval(time, false);
        let phi_after = eval(time, true);
        let jump = phi_after - phi_before;
        let allowed = tolerance::JUMP_REL * (1.0 + phi_before.abs());
        if jump > allowed {
            pass = false;
        }
        max_jump = max_jump.max(jump);
        checks.push(JumpCheck {
            time,
            job,
            event,
            phi_before,
            phi_after,
            jump,
            allowed,
        });
    }

    let initial_phi = checks
        .first()
        .map(|c| eval(c.time, false))
        .unwrap_or(0.0);
    let horizon = trace_alg.end_time.max(trace_cmp.end_time);
    let final_phi = eval(horizon, true);

    Ok(JumpReport {
        kind,
        checks,
        max_jump,
        pass,
        initial_phi,
        final_phi,
    })
}

// ---------------------------------------------------------------------------
// Drift verification
// ---------------------------------------------------------------------------

/// Checks the per-side drift bounds on every inter-event interval: the
/// comparison side's bound everywhere, the algorithm side's bound where its
/// applicability condition holds. Errors if the comparison trace's recorded allocations are
/// ever infeasible.
pub fn verify_drifts(
    trace_alg: &Trace,
    trace_cmp: &Trace,
    c1: f64,
    c2: f64,
    case: &DriftCase,
    f: &Speedup,
) -> Result<DriftReport, AnalysisError> {
    require_same_workload(trace_alg, trace_cmp)?;
    if let DriftCase::TimeZero { .. } = case {
        require_time_zero(trace_alg)?;
    }
    let alg = Replay::new(trace_alg)?;
    let cmp = Replay::new(trace_cmp)?;
    let servers = alg
        .servers()
        .or(cmp.servers())
        .unwrap_or(1.0);

    for rec in cmp.records {
        if !check_feasible(&rec.allocation, &rec.snapshot, f)? {
            return Err(AnalysisError::InfeasibleComparison { time: rec.start });
        }
    }

    let select = |e: &super::PotentialEval| match case {
        DriftCase::OnlineArrival { .. } => e.phi_total,
        DriftCase::TimeZero { .. } => e.phi_sf_total,
    };

    let mut times: Vec<f64> = trace_alg
        .events
        .iter()
        .chain(&trace_cmp.events)
        .map(|e| e.time)
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();

    let alpha = f.alpha();
    let mut rows = Vec::new();
    let mut worst_margin = f64::INFINITY;
    let mut pass = true;

    for pair in times.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let dt = b - a;
        if dt <= tolerance::MIN_STEP {
            continue;
        }
        let alg_a = alg.remnants_at(a, true);
        let cmp_a = cmp.remnants_at(a, true);
        let alg_b = alg.remnants_at(b, false);
        let cmp_b = cmp.remnants_at(b, false);

        let n = alg_a.len();
        let n_i = alg_a
            .iter()
            .filter(|r| r.kind == crate::model::PhaseKind::Inelastic)
            .count();
        let n_e = n - n_i;
        let n_o = cmp_a.len();
        let nf = n as f64;
        let nof = n_o as f64;

        let base = select(&eval_potential(&alg_a, &cmp_a, a, servers, c1, c2, f, RankConvention::OldestFirst));
        let alg_end = select(&eval_potential(&alg_b, &cmp_a, b, servers, c1, c2, f, RankConvention::OldestFirst));
        let cmp_end = select(&eval_potential(&alg_a, &cmp_b, b, servers, c1, c2, f, RankConvention::OldestFirst));
        let alg_drift = (alg_end - base) / dt;
        let cmp_drift = (cmp_end - base) / dt;

        let (alg_bound, alg_applicable, cmp_bound) = match *case {
            DriftCase::OnlineArrival { beta, theta, gamma } => {
                let cmp_bound = if n == 0 {
                    c2 * nof
                } else {
                    c1 * nf * f.q(nof) / f.q(nf) + c2 * nof
                };
                let applicable = n >= 1 && nof <= gamma * nf;
                let bound = if n >= 1 {
                    match lcfs_plan(n, n_e, n_i, servers, beta, theta, f) {
                        LcfsPlan::Saturated { .. } => {
                            -c1 * (1.0 - beta) * (beta - gamma) * nf / f.p(beta)
                        }
                        LcfsPlan::InelasticHeavy { .. } => -c2 * servers.min(n_i as f64),
                        LcfsPlan::InelasticLight { .. } => {
                            -c1 * (1.0 - beta) * (beta - theta - gamma) * nf / f.p(beta)
                        }
                    }
                } else {
                    0.0
                };
                (bound, applicable, cmp_bound)
            }
            DriftCase::TimeZero { delta } => {
                let cmp_bound = c1 / alpha * nf + c1 * (1.0 - 1.0 / alpha) * nof + c2 * nof;
                let applicable = n >= 1;
                let bound = if n >= 1 {
                    match pa_equi_plan(n, n_e, n_i, servers, delta, f) {
                        PaEquiPlan::Saturated { .. } => -c1 * (nf - nof).max(0.0),
                        PaEquiPlan::InelasticHeavy { .. } => -c2 * n_i as f64,
                        PaEquiPlan::InelasticLight { .. } => {
                            -c1 * (n_e as f64 - nof).max(0.0)
                        }
                    }
                } else {
                    0.0
                };
                (bound, applicable, cmp_bound)
            }
        };

        for (side, drift, bound, applicable) in [
            (DriftSide::Algorithm, alg_drift, alg_bound, alg_applicable),
            (DriftSide::Comparison, cmp_drift, cmp_bound, true),
        ] {
            let margin = bound - drift;
            if applicable {
                let tol = tolerance::DRIFT_REL * (1.0 + bound.abs());
                if drift > bound + tol {
                    pass = false;
                }
                worst_margin = worst_margin.min(margin);
            }
            rows.push(DriftRow {
                interval_start: a,
                interval_end: b,
                side,
                drift,
                bound,
                margin,
                applicable,
            });
        }
    }

    Ok(DriftReport {
        rows,
        worst_margin,
        pass,
    })
}
