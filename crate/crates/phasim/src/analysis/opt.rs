//! Optimal-schedule estimation for small instances.
//!
//! [`opt_lower_bound`] is a closed-form floor on the total flow time of any
//! feasible schedule: no job can finish faster than running alone with every
//! server. [`brute_force_opt`] searches a restricted family of real schedules
//! (server shares on a grid, re-decided every `dt`, work credited in whole
//! units) by dynamic programming; its value therefore upper-bounds the
//! continuous optimum and converges to it as the grid refines. Together the
//! two bracket the true optimum and feed empirical competitive-ratio
//! measurements.

use std::collections::HashMap;

use super::AnalysisError;
use crate::engine::Trace;
use crate::model::{JobSpec, PhaseKind};
use crate::speedup::Speedup;

/// Most jobs the exhaustive search will accept.
pub const BRUTE_FORCE_MAX_JOBS: usize = 3;

/// Hard cap on distinct states the search may expand.
const STATE_BUDGET: usize = 4_000_000;

/// Work-accounting resolution: each step is divided into this many work
/// units at unit speed. Work done in a step is rounded down to whole units,
/// which keeps every reachable state on a finite lattice (so memoization is
/// exact) at the cost of under-crediting irrational speeds by at most one
/// part in this constant.
const WORK_UNITS_PER_STEP: f64 = 32.0;

/// Result of the exhaustive schedule search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForceResult {
    /// Best total flow time found on the requested grid. An upper bound on
    /// the continuous optimum.
    pub flow_time: f64,
    /// Discretization-error estimate: twice the change observed when the
    /// share grid and time step are coarsened by 2× (+∞ when the coarser
    /// problem is not well-posed).
    pub slack: f64,
}

/// Sums each job's minimum possible response time: elastic work at the full
/// cluster's speed plus inelastic work at unit speed.
pub fn opt_lower_bound(
    workload: &[JobSpec],
    servers: f64,
    f: &Speedup,
) -> Result<f64, AnalysisError> {
    let mut total = 0.0;
    for job in workload {
        job.validate()?;
        let (whole, inelastic) = job.suffix_work(0);
        let elastic = whole - inelastic;
        total += elastic / f.p(servers) + inelastic;
    }
    Ok(total)
}

/// Total flow time of `trace` divided by the instance's flow lower bound.
pub fn empirical_ratio(
    trace: &Trace,
    workload: &[JobSpec],
    servers: f64,
    f: &Speedup,
) -> Result<f64, AnalysisError> {
    let denom = opt_lower_bound(workload, servers, f)?;
    if denom <= 0.0 {
        return Err(AnalysisError::ZeroLowerBound);
    }
    Ok(trace.flow_time / denom)
}

// ---------------------------------------------------------------------------
// Exhaustive search
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct SimJob {
    arrival_step: u32,
    kinds: Vec<PhaseKind>,
    /// Each phase's size in work units, rounded up to whole units.
    unit_sizes: Vec<u32>,
}

/// Per-job progress: current phase index (== phase count when finished) and
/// work units left in that phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Progress {
    phase: u32,
    units: u32,
}

#[derive(Clone, Copy)]
enum Memo {
    Visiting,
    Done(f64),
}

type Key = (u32, Vec<Progress>);

struct Search<'a> {
    jobs: Vec<SimJob>,
    slots: usize,
    grid: f64,
    dt: f64,
    /// Steps at or beyond this index see no further arrivals, so the value
    /// function is stationary and keys can be clamped here.
    stationary_step: u32,
    f: &'a Speedup,
    memo: HashMap<Key, Memo>,
    expanded: usize,
}

impl Progress {
    fn done(&self, job: &SimJob) -> bool {
        self.phase as usize >= job.kinds.len()
    }
}

impl<'a> Search<'a> {
    fn key(&self, step: u32, states: &[Progress]) -> Key {
        (step.min(self.stationary_step), states.to_vec())
    }

    /// Units of work a share buys in one step for the given phase kind.
    fn credit(&self, kind: PhaseKind, share: f64) -> u32 {
        let speed = match kind {
            PhaseKind::Elastic => self.f.p(share),
            PhaseKind::Inelastic => self.f.p(share).min(1.0),
        };
        (speed * WORK_UNITS_PER_STEP + 1e-9).floor() as u32
    }

    /// Runs one job through a step at a constant share. Work beyond an inner
    /// phase boundary is discarded (the job sits out the rest of the step),
    /// so states stay on the unit lattice; a finishing job's in-step time is
    /// interpolated from its credited work rate. Returns the updated progress
    /// and the time the job spent unfinished inside the step.
    fn advance(&self, job: &SimJob, mut p: Progress, share: f64) -> (Progress, f64) {
        if p.done(job) {
            return (p, 0.0);
        }
        let credit = self.credit(job.kinds[p.phase as usize], share);
        if credit == 0 {
            return (p, self.dt);
        }
        if credit < p.units {
            p.units -= credit;
            return (p, self.dt);
        }
        // Phase completes within this step.
        let fraction = f64::from(p.units) / f64::from(credit);
        p.phase += 1;
        if p.done(job) {
            p.units = 0;
            (p, self.dt * fraction)
        } else {
            p.units = job.unit_sizes[p.phase as usize];
            (p, self.dt)
        }
    }

    fn solve(&mut self, step: u32, states: &[Progress]) -> Result<f64, AnalysisError> {
        let active: Vec<usize> = (0..self.jobs.len())
            .filter(|&i| self.jobs[i].arrival_step <= step && !states[i].done(&self.jobs[i]))
            .collect();
        let all_done = states
            .iter()
            .zip(&self.jobs)
            .all(|(p, j)| p.done(j));
        if all_done {
            return Ok(0.0);
        }
        if active.is_empty() {
            // Nothing runnable yet; idle through the step at zero cost.
            return self.solve(step + 1, states);
        }

        let key = self.key(step, states);
        match self.memo.get(&key) {
            Some(Memo::Done(v)) => return Ok(*v),
            Some(Memo::Visiting) => return Ok(f64::INFINITY),
            None => {}
        }
        self.memo.insert(key.clone(), Memo::Visiting);
        self.expanded += 1;
        if self.expanded > STATE_BUDGET {
            return Err(AnalysisError::SearchBudget(STATE_BUDGET));
        }

        let mut best = f64::INFINITY;
        let mut shares = vec![0usize; active.len()];
        let mut next = states.to_vec();
        self.try_compositions(step, states, &active, 0, self.slots, &mut shares, &mut next, &mut best)?;

        self.memo.insert(key, Memo::Done(best));
        Ok(best)
    }

    /// Enumerates every way to split all share slots across the active jobs
    /// and recurses on the best.
    #[allow(clippy::too_many_arguments)]
    fn try_compositions(
        &mut self,
        step: u32,
        states: &[Progress],
        active: &[usize],
        pos: usize,
        slots_left: usize,
        shares: &mut Vec<usize>,
        next: &mut Vec<Progress>,
        best: &mut f64,
    ) -> Result<(), AnalysisError> {
        if pos + 1 == active.len() {
            shares[pos] = slots_left;
            next.copy_from_slice(states);
            let mut cost = 0.0;
            for (k, &i) in active.iter().enumerate() {
                let share = shares[k] as f64 * self.grid;
                let (p, time_active) = self.advance(&self.jobs[i], states[i], share);
                next[i] = p;
                cost += time_active;
            }
            let tail = self.solve(step + 1, next)?;
            if cost + tail < *best {
                *best = cost + tail;
            }
            return Ok(());
        }
        for give in 0..=slots_left {
            shares[pos] = give;
            self.try_compositions(step, states, active, pos + 1, slots_left - give, shares, next, best)?;
        }
        Ok(())
    }
}

fn integral_multiple(value: f64, unit: f64) -> Option<u32> {
    let ratio = value / unit;
    let rounded = ratio.round();
    if (ratio - rounded).abs() <= 1e-9 && rounded >= 0.0 && rounded <= u32::MAX as f64 {
        Some(rounded as u32)
    } else {
        None
    }
}

fn solve_once(
    workload: &[JobSpec],
    servers: f64,
    f: &Speedup,
    grid: f64,
    dt: f64,
) -> Result<f64, AnalysisError> {
    if !(grid > 0.0) || !grid.is_finite() {
        return Err(AnalysisError::InvalidGrid(grid));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(AnalysisError::InvalidStep(dt));
    }
    let slots = integral_multiple(servers, grid).ok_or(AnalysisError::InvalidGrid(grid))?;
    if slots == 0 {
        return Err(AnalysisError::InvalidGrid(grid));
    }

    let unit = dt / WORK_UNITS_PER_STEP;
    let mut jobs = Vec::with_capacity(workload.len());
    let mut states = Vec::with_capacity(workload.len());
    let mut stationary_step = 0u32;
    for spec in workload {
        spec.validate()?;
        let arrival_step =
            integral_multiple(spec.arrival, dt).ok_or(AnalysisError::InvalidStep(dt))?;
        stationary_step = stationary_step.max(arrival_step);
        let kinds = spec.phases.iter().map(|p| p.kind).collect();
        let unit_sizes: Vec<u32> = spec
            .phases
            .iter()
            .map(|p| (p.size / unit - 1e-9).ceil().max(1.0) as u32)
            .collect();
        states.push(Progress {
            phase: 0,
            units: unit_sizes[0],
        });
        jobs.push(SimJob {
            arrival_step,
            kinds,
            unit_sizes,
        });
    }

    let mut search = Search {
        jobs,
        slots: slots as usize,
        grid,
        dt,
        stationary_step,
        f,
        memo: HashMap::new(),
        expanded: 0,
    };
    search.solve(0, &states)
}

/// Finds the cheapest quantized clairvoyant schedule for a tiny instance.
///
/// Shares move on a grid of `grid` servers and may change every `dt` time
/// units; work is credited in whole units of `dt / 8` at unit speed, rounding
/// down, so every schedule the search considers is realizable and the result
/// never undershoots the continuous optimum. `servers` must be an integral
/// number of grid cells and every arrival an integral number of steps.
/// Instances with more than [`BRUTE_FORCE_MAX_JOBS`] jobs are refused.
pub fn brute_force_opt(
    workload: &[JobSpec],
    servers: f64,
    f: &Speedup,
    grid: f64,
    dt: f64,
) -> Result<BruteForceResult, AnalysisError> {
    if workload.len() > BRUTE_FORCE_MAX_JOBS {
        return Err(AnalysisError::TooManyJobs {
            count: workload.len(),
            max: BRUTE_FORCE_MAX_JOBS,
        });
    }
    let flow_time = solve_once(workload, servers, f, grid, dt)?;
    let slack = match solve_once(workload, servers, f, grid * 2.0, dt * 2.0) {
        Ok(coarse) => 2.0 * (flow_time - coarse).abs(),
        Err(_) => f64::INFINITY,
    };
    Ok(BruteForceResult { flow_time, slack })
}
