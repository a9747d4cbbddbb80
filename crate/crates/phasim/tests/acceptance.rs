//! Acceptance suite: one test per delivery criterion, each printing a single
//! PASS/FAIL line with the measured values behind the verdict.
//!
//! The simulation criteria share one sweep of the five benchmark policies so
//! the whole suite fits its runtime budgets on a single core.

mod common;

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::{speedup, stochastic_jobs};
use phasim::analysis::{
    brute_force_opt, check_conditions, empirical_ratio, equi_bound, equi_weights, lcfs_bound,
    opt_lower_bound, search_beta, verify_drifts, verify_jumps, DriftCase, PotentialKind,
};
use phasim::experiment::{
    run_experiment, sweep, ExperimentConfig, PolicyAggregate, SweepDimension, WorkloadSpec,
};
use phasim::workload::{FirstPhase, ProfileConfig, StochasticConfig};
use phasim::{run, JobSpec, PhaseKind, PhaseSpec, Policy, RecordLevel};

// ---------------------------------------------------------------------------
// Shared benchmark setup
// ---------------------------------------------------------------------------

const REPLICATIONS: u32 = 200;
const BASE_SEED: u64 = 42;
const RATES: [f64; 4] = [5.0, 7.0, 9.0, 11.0];
const FIG_THETA: f64 = 0.25;

/// Index into the five benchmark policies, in figure-legend order.
const FLCFS_1: usize = 0;
const FLCFS_34: usize = 1;
const IF: usize = 2;
const EQUI: usize = 3;
const PA_FCFS: usize = 4;

const POLICY_LABELS: [&str; 5] = [
    "recency beta=1",
    "recency beta=3/4",
    "inelastic-first",
    "equal-split",
    "first-come-first-served",
];

/// Published mean flow times at arrival rates 5, 7, 9, 11 (ten servers).
const PUBLISHED_N10: [[f64; 4]; 5] = [
    [99.5204, 111.2413, 120.9422, 130.1422],
    [107.0254, 118.2318, 129.0677, 139.3755],
    [126.4096, 149.7868, 172.3358, 196.3062],
    [124.5763, 145.7353, 170.8807, 190.3415],
    [286.8909, 349.4728, 416.9715, 481.4032],
];

fn benchmark_policies() -> Vec<Policy> {
    vec![
        Policy::FractionalLcfs {
            beta: 1.0,
            theta: FIG_THETA,
        },
        Policy::FractionalLcfs {
            beta: 0.75,
            theta: FIG_THETA,
        },
        Policy::InelasticFirst,
        Policy::BlindEqui,
        Policy::PaFcfs,
    ]
}

fn stochastic_spec(rate: f64) -> WorkloadSpec {
    WorkloadSpec::Stochastic(StochasticConfig {
        arrival_rate: rate,
        horizon_slots: 1000,
        mean_phases: 7.0,
        mean_phase_size: 5.0,
        first_phase: FirstPhase::RandomEqual,
        seed: 0,
    })
}

fn benchmark_config(servers: f64) -> ExperimentConfig {
    ExperimentConfig {
        policies: benchmark_policies(),
        servers,
        alpha: 2.0,
        workload: stochastic_spec(RATES[0]),
        replications: REPLICATIONS,
        base_seed: BASE_SEED,
        workers: 1,
    }
}

/// Five policies swept over the four arrival rates at ten servers; shared by
/// the figure-reproduction and ordering criteria.
fn ten_server_sweep() -> &'static [PolicyAggregate] {
    static SWEEP: OnceLock<Vec<PolicyAggregate>> = OnceLock::new();
    SWEEP.get_or_init(|| {
        sweep(
            &benchmark_config(10.0),
            SweepDimension::ArrivalRate,
            &RATES,
        )
        .expect("benchmark sweep")
    })
}

/// Mean per-job flow time for one policy at one swept rate.
fn mean_at(rows: &[PolicyAggregate], rate_idx: usize, policy_idx: usize) -> f64 {
    let row = &rows[rate_idx * POLICY_LABELS.len() + policy_idx];
    assert_eq!(row.arrival_rate, Some(RATES[rate_idx]), "sweep row order");
    assert!(row.mean_flow_time.is_finite());
    row.mean_flow_time
}

fn conclude(id: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id:02}: {verdict} — {detail}");
    assert!(pass, "criterion {id:02} failed: {detail}");
}

fn within_budget(id: u32, elapsed: Duration, budget: Duration) {
    assert!(
        elapsed <= budget,
        "criterion {id:02} exceeded its runtime budget: {elapsed:?} > {budget:?}"
    );
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_equal_split_bound_is_exact_at_the_reference_point() {
    let mu = equi_bound(2.0, 0.25).expect("valid parameters");
    let expected = 50.0 / 3.0;
    let rel = (mu - expected).abs() / expected;
    conclude(
        1,
        rel <= 1e-12,
        &format!("equal-split bound at (2, 1/4) = {mu} vs {expected} (rel err {rel:.2e})"),
    );
}

#[test]
fn criterion_02_recency_bound_is_feasible_and_near_the_published_ratio() {
    let bound = lcfs_bound(2.0, 1.0 / 6.0, 1.0 / 72.0, 1.0 / 72.0).expect("valid parameters");
    let published = 635.76;
    let kappa = bound.kappa.unwrap_or(f64::NAN);
    let gap = (kappa - published).abs() / published;
    // The published constant was assembled from rounded intermediate
    // values; we report the exact recomputation next to it rather than
    // adjusting either number.
    conclude(
        2,
        bound.feasible && gap <= 0.05,
        &format!(
            "feasible={}, recomputed ratio {kappa:.6} vs published {published} \
             (difference {:.2}%, from unrounded c1={:?}, c2={:?})",
            bound.feasible,
            gap * 100.0,
            bound.c1,
            bound.c2
        ),
    );
}

#[test]
fn criterion_03_parameter_search_succeeds_across_the_exponent_grid() {
    let alphas = [1.2, 1.5, 2.0, 3.0, 5.0];
    let start = Instant::now();
    let mut betas = Vec::new();
    for &alpha in &alphas {
        let (beta, theta, gamma) = search_beta(alpha).expect("search must succeed");
        let report = check_conditions(alpha, beta, theta, gamma).expect("valid triple");
        assert!(
            report.all_satisfied,
            "alpha={alpha}: returned triple violates a condition"
        );
        betas.push(beta);
    }
    let elapsed = start.elapsed();
    let monotone = betas.windows(2).all(|w| w[0] <= w[1] + 1e-12);
    within_budget(3, elapsed, Duration::from_secs(1));
    conclude(
        3,
        monotone,
        &format!("betas over alpha {alphas:?} = {betas:?} in {elapsed:?}"),
    );
}

#[test]
fn criterion_04_ten_server_benchmark_tracks_the_published_curves() {
    let start = Instant::now();
    let rows = ten_server_sweep();

    let mut failures = Vec::new();
    for (policy_idx, label) in POLICY_LABELS.iter().enumerate() {
        for rate_idx in [0usize, 3] {
            let measured = mean_at(rows, rate_idx, policy_idx);
            let expected = PUBLISHED_N10[policy_idx][rate_idx];
            let rel = (measured - expected).abs() / expected;
            if rel > 0.10 {
                failures.push(format!(
                    "{label}@rate {}: measured {measured:.2} vs published {expected:.2} \
                     ({:+.0}%)",
                    RATES[rate_idx],
                    (measured / expected - 1.0) * 100.0
                ));
            }
        }
    }
    within_budget(4, start.elapsed(), Duration::from_secs(600));

    if failures.is_empty() {
        conclude(4, true, "all ten absolute checks fell within ±10%");
        return;
    }

    // Sanctioned fallback: absolute levels depend on workload-generation
    // interpretation, so when they miss, the qualitative orderings must
    // still hold and the measured values must be reported.
    let mut orderings_hold = true;
    for rate_idx in [0usize, 3] {
        let recency = mean_at(rows, rate_idx, FLCFS_1);
        let wider = mean_at(rows, rate_idx, FLCFS_34);
        let fcfs = mean_at(rows, rate_idx, PA_FCFS);
        orderings_hold &= fcfs >= 2.0 * recency && recency <= wider;
    }
    conclude(
        4,
        orderings_hold,
        &format!(
            "absolute checks outside ±10% ({}); fallback orderings \
             (first-come ≥ 2× recency, beta=1 ≤ beta=3/4) {} at rates 5 and 11",
            failures.join("; "),
            if orderings_hold { "hold" } else { "FAIL" }
        ),
    );
}

#[test]
fn criterion_05_orderings_hold_at_ten_and_one_hundred_servers() {
    let rows = ten_server_sweep();
    let mut detail = Vec::new();
    let mut pass = true;

    for (rate_idx, rate) in RATES.iter().enumerate() {
        let recency = mean_at(rows, rate_idx, FLCFS_1);
        let wider = mean_at(rows, rate_idx, FLCFS_34);
        let fcfs = mean_at(rows, rate_idx, PA_FCFS);
        let ratio = fcfs / recency;
        pass &= ratio >= 2.0 && recency <= wider;
        detail.push(format!(
            "rate {rate}: first-come/recency = {ratio:.2}, beta=1 {recency:.1} vs \
             beta=3/4 {wider:.1}"
        ));
    }

    // The published hundred-server comparison operates where offered
    // inelastic work is 17–40% of capacity (its curves are nearly flat, so
    // scheduling differences — except first-come-first-served's — have
    // washed out). At this size scale that corresponds to roughly two
    // arrivals per slot: 2·(7/2)·5 = 35 inelastic work against 100 servers.
    let hundred_server_rate = 2.0;
    let start = Instant::now();
    let mut cfg = benchmark_config(100.0);
    cfg.workload = stochastic_spec(hundred_server_rate);
    let wide = run_experiment(&cfg).expect("hundred-server experiment");
    within_budget(5, start.elapsed(), Duration::from_secs(600));

    let non_fcfs: Vec<f64> = [FLCFS_1, FLCFS_34, IF, EQUI]
        .iter()
        .map(|&i| wide[i].mean_flow_time)
        .collect();
    let lo = non_fcfs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = non_fcfs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread_ok = hi <= 1.20 * lo;
    let fcfs = wide[PA_FCFS].mean_flow_time;
    let fcfs_dominates = non_fcfs.iter().all(|&m| fcfs > 2.0 * m);
    pass &= spread_ok && fcfs_dominates;
    detail.push(format!(
        "hundred servers @rate {hundred_server_rate}: non-first-come means {:?} \
         (spread {:.1}%), first-come {fcfs:.1}",
        non_fcfs
            .iter()
            .map(|m| (m * 10.0).round() / 10.0)
            .collect::<Vec<_>>(),
        (hi / lo - 1.0) * 100.0
    ));

    conclude(5, pass, &detail.join("; "));
}

#[test]
fn criterion_06_flow_time_rises_as_the_recency_fraction_shrinks() {
    let start = Instant::now();
    let betas = [1.0, 0.75, 2.0 / 3.0, 0.5, 1.0 / 3.0];
    let cfg = ExperimentConfig {
        policies: betas
            .iter()
            .map(|&beta| Policy::FractionalLcfs {
                beta,
                theta: FIG_THETA,
            })
            .collect(),
        servers: 10.0,
        alpha: 2.0,
        workload: stochastic_spec(10.0),
        replications: REPLICATIONS,
        base_seed: BASE_SEED,
        workers: 1,
    };
    let rows = run_experiment(&cfg).expect("recency-fraction experiment");
    within_budget(6, start.elapsed(), Duration::from_secs(300));

    let mut pass = true;
    let mut detail: Vec<String> = vec![format!(
        "means {:?}",
        rows.iter()
            .map(|r| (r.mean_flow_time * 100.0).round() / 100.0)
            .collect::<Vec<_>>()
    )];
    for pair in rows.windows(2) {
        // Replications are seeded identically across policies, so gaps are
        // compared pairwise within each replication.
        let diffs: Vec<f64> = pair[0]
            .per_rep
            .iter()
            .zip(&pair[1].per_rep)
            .filter_map(|(a, b)| Some(b.as_ref()? - a.as_ref()?))
            .collect();
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let lower = mean - 1.645 * (var / n).sqrt();
        pass &= pair[1].mean_flow_time > pair[0].mean_flow_time && lower > 0.0;
        detail.push(format!("gap {mean:.2} (95% lower bound {lower:.2})"));
    }
    conclude(6, pass, &detail.join("; "));
}

#[test]
fn criterion_07_inelastic_first_deteriorates_on_the_alternating_profile() {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        policies: vec![
            Policy::InelasticFirst,
            Policy::BlindEqui,
            Policy::FractionalLcfs {
                beta: 1.0,
                theta: FIG_THETA,
            },
        ],
        servers: 10.0,
        alpha: 2.0,
        workload: WorkloadSpec::Profile(ProfileConfig {
            sizes: vec![1.0, 10.0, 1.0, 10.0, 1.0, 10.0, 1.0, 10.0],
            first_phase: FirstPhase::Elastic,
            arrival_rate: RATES[0],
            horizon_slots: 1000,
            seed: 0,
        }),
        replications: REPLICATIONS,
        base_seed: BASE_SEED,
        workers: 1,
    };
    let rows = sweep(&cfg, SweepDimension::ArrivalRate, &RATES).expect("profile sweep");
    within_budget(7, start.elapsed(), Duration::from_secs(600));

    let mut pass = true;
    let mut detail = Vec::new();
    for (rate_idx, rate) in RATES.iter().enumerate() {
        let base = rate_idx * cfg.policies.len();
        let inelastic_first = rows[base].mean_flow_time;
        let equal_split = rows[base + 1].mean_flow_time;
        let recency = rows[base + 2].mean_flow_time;
        pass &= inelastic_first > equal_split && inelastic_first > recency;
        detail.push(format!(
            "rate {rate}: inelastic-first {inelastic_first:.1} vs equal-split \
             {equal_split:.1}, recency {recency:.1}"
        ));
    }
    conclude(7, pass, &detail.join("; "));
}

#[test]
fn criterion_08_potential_checks_pass_across_random_trace_pairs() {
    let start = Instant::now();
    let f = speedup(2.0);
    let servers = 4.0;

    let recency = check_conditions(2.0, 1.0 / 6.0, 1.0 / 72.0, 1.0 / 72.0).expect("parameters");
    let (rc1, rc2) = (recency.min_c1.unwrap(), recency.min_c2.unwrap());
    let recency_policy = Policy::FractionalLcfs {
        beta: 1.0 / 6.0,
        theta: 1.0 / 72.0,
    };
    let online_case = DriftCase::OnlineArrival {
        beta: 1.0 / 6.0,
        theta: 1.0 / 72.0,
        gamma: 1.0 / 72.0,
    };

    let (ec1, ec2) = equi_weights(2.0, 0.25).expect("weights");
    let equal_split = Policy::PaEqui { delta: 0.25 };
    let zero_case = DriftCase::TimeZero { delta: 0.25 };

    let mut jump_pairs = 0usize;
    let mut drift_pairs = 0usize;
    let mut max_jump = 0.0f64;
    let mut worst_margin = f64::INFINITY;

    // Arrival-time potential along recency traces.
    for seed in 0..60u64 {
        let workload = stochastic_jobs(2.0, 10, 3.0, 1.0, 80_000 + seed);
        if workload.is_empty() {
            continue;
        }
        let alg = run(&workload, &recency_policy, servers, &f, RecordLevel::Full).unwrap();
        for cmp_policy in [Policy::PaFcfs, Policy::InelasticFirst] {
            let cmp = run(&workload, &cmp_policy, servers, &f, RecordLevel::Full).unwrap();
            let jumps =
                verify_jumps(&alg, &cmp, rc1, rc2, PotentialKind::OnlineArrival, &f).unwrap();
            assert!(jumps.pass, "online jump failure at seed {seed}");
            max_jump = max_jump.max(jumps.max_jump);
            jump_pairs += 1;
            let drifts = verify_drifts(&alg, &cmp, rc1, rc2, &online_case, &f).unwrap();
            assert!(drifts.pass, "online drift failure at seed {seed}");
            worst_margin = worst_margin.min(drifts.worst_margin);
            drift_pairs += 1;
        }
    }

    // Time-zero potential along equal-split traces on batch workloads.
    for seed in 0..50u64 {
        let mut workload = stochastic_jobs(1.5, 8, 3.0, 1.0, 90_000 + seed);
        for spec in &mut workload {
            spec.arrival = 0.0;
        }
        if workload.is_empty() {
            continue;
        }
        let alg = run(&workload, &equal_split, servers, &f, RecordLevel::Full).unwrap();
        for cmp_policy in [Policy::InelasticFirst, Policy::BlindEqui] {
            let cmp = run(&workload, &cmp_policy, servers, &f, RecordLevel::Full).unwrap();
            let jumps = verify_jumps(&alg, &cmp, ec1, ec2, PotentialKind::TimeZero, &f).unwrap();
            assert!(jumps.pass, "time-zero jump failure at seed {seed}");
            max_jump = max_jump.max(jumps.max_jump);
            jump_pairs += 1;
            let drifts = verify_drifts(&alg, &cmp, ec1, ec2, &zero_case, &f).unwrap();
            assert!(drifts.pass, "time-zero drift failure at seed {seed}");
            worst_margin = worst_margin.min(drifts.worst_margin);
            drift_pairs += 1;
        }
    }

    let elapsed = start.elapsed();
    within_budget(8, elapsed, Duration::from_secs(300));
    conclude(
        8,
        jump_pairs >= 200 && drift_pairs >= 50,
        &format!(
            "{jump_pairs} jump pairs (max upward jump {max_jump:.2e}) and {drift_pairs} \
             drift pairs (worst margin {worst_margin:.3}) in {elapsed:?}"
        ),
    );
}

#[test]
fn criterion_09_empirical_ratios_stay_under_the_proved_ceilings() {
    let start = Instant::now();
    let f = speedup(2.0);
    let servers = 4.0;
    let bound = lcfs_bound(2.0, 1.0 / 6.0, 1.0 / 72.0, 1.0 / 72.0).expect("parameters");
    let kappa = bound.kappa.expect("feasible point");
    let equi_ceiling = 50.0 / 3.0;
    let recency_policy = Policy::FractionalLcfs {
        beta: 1.0 / 6.0,
        theta: 1.0 / 72.0,
    };
    let equal_split = Policy::PaEqui { delta: 0.25 };

    let mut produced = 0u32;
    let mut seed = 300_000u64;
    let mut worst_recency = 0.0f64;
    let mut worst_equal_split = 0.0f64;
    while produced < 100 {
        let workload = stochastic_jobs(1.0, 8, 2.0, 1.0, seed);
        seed += 1;
        if workload.is_empty() || workload.len() > 20 {
            continue;
        }
        produced += 1;

        let trace = run(&workload, &recency_policy, servers, &f, RecordLevel::Lean).unwrap();
        let ratio = empirical_ratio(&trace, &workload, servers, &f).unwrap();
        worst_recency = worst_recency.max(ratio);
        assert!(
            ratio <= kappa,
            "recency ratio {ratio} exceeds {kappa} on seed {}",
            seed - 1
        );

        let mut batch = workload.clone();
        for spec in &mut batch {
            spec.arrival = 0.0;
        }
        let trace = run(&batch, &equal_split, servers, &f, RecordLevel::Lean).unwrap();
        let ratio = empirical_ratio(&trace, &batch, servers, &f).unwrap();
        worst_equal_split = worst_equal_split.max(ratio);
        assert!(
            ratio <= equi_ceiling,
            "equal-split ratio {ratio} exceeds {equi_ceiling} on seed {}",
            seed - 1
        );
    }
    let elapsed = start.elapsed();
    within_budget(9, elapsed, Duration::from_secs(120));
    conclude(
        9,
        true,
        &format!(
            "100 workloads: worst recency ratio {worst_recency:.3} (ceiling {kappa:.1}), \
             worst equal-split ratio {worst_equal_split:.3} (ceiling {equi_ceiling:.3})"
        ),
    );
}

#[test]
fn criterion_10_schedule_search_converges_and_matches_closed_forms() {
    let start = Instant::now();
    let f = speedup(2.0);
    let elastic = |size: f64| PhaseSpec {
        kind: PhaseKind::Elastic,
        size,
    };
    let inelastic = |size: f64| PhaseSpec {
        kind: PhaseKind::Inelastic,
        size,
    };
    let fixture = |phases: Vec<PhaseSpec>, twin: bool| -> Vec<JobSpec> {
        let mut jobs = vec![JobSpec {
            id: 0,
            arrival: 0.0,
            phases: phases.clone(),
        }];
        if twin {
            jobs.push(JobSpec {
                id: 1,
                arrival: 0.0,
                phases,
            });
        }
        jobs
    };

    // (workload, servers, grid, dt, closed-form single-job flow)
    let single_one = fixture(vec![elastic(4.0)], false);
    let single_two = fixture(vec![elastic(8.0), inelastic(2.0)], false);
    let twins = fixture(vec![elastic(2.0)], true);
    let cases: [(&str, &Vec<JobSpec>, f64, f64, f64, Option<f64>); 3] = [
        ("single elastic", &single_one, 4.0, 0.5, 0.25, Some(2.0)),
        ("elastic+inelastic", &single_two, 4.0, 0.5, 0.25, Some(6.0)),
        ("two elastic twins", &twins, 1.0, 0.25, 0.25, None),
    ];

    let mut detail = Vec::new();
    let mut pass = true;
    for (label, jobs, servers, grid, dt, closed_form) in cases {
        let base = brute_force_opt(jobs, servers, &f, grid, dt).unwrap();
        let halved = brute_force_opt(jobs, servers, &f, grid / 2.0, dt / 2.0).unwrap();
        let change = (base.flow_time - halved.flow_time).abs() / halved.flow_time;
        pass &= change < 0.02;

        let lower = opt_lower_bound(jobs, servers, &f).unwrap();
        pass &= base.flow_time >= lower - 1e-9 && halved.flow_time >= lower - 1e-9;

        match closed_form {
            Some(expected) => {
                // Single-job schedules are closed-form; the engine must land
                // on the same number and the search may differ only by its
                // reported slack.
                let trace = run(
                    jobs,
                    &Policy::PaEqui { delta: 0.25 },
                    servers,
                    &f,
                    RecordLevel::Lean,
                )
                .unwrap();
                pass &= (trace.flow_time - expected).abs() <= 1e-9;
                pass &= (base.flow_time - trace.flow_time).abs() <= base.slack + 1e-9;
                detail.push(format!(
                    "{label}: search {:.6} vs engine {:.6} (slack {:.1e}, halving {:.3}%)",
                    base.flow_time,
                    trace.flow_time,
                    base.slack,
                    change * 100.0
                ));
            }
            None => {
                // The two-job optimum has no closed form, but any valid
                // schedule beats equal-split and none beats the provable
                // floor of 2 + 2√3.
                let equal_split =
                    run(jobs, &Policy::BlindEqui, servers, &f, RecordLevel::Lean).unwrap();
                pass &= base.flow_time < equal_split.flow_time;
                pass &= base.flow_time >= 2.0 + 2.0 * 3.0f64.sqrt() - 1e-9;
                detail.push(format!(
                    "{label}: search {:.6} in ((2+2√3)={:.6}, equal-split={:.6}), \
                     halving {:.3}%",
                    base.flow_time,
                    2.0 + 2.0 * 3.0f64.sqrt(),
                    equal_split.flow_time,
                    change * 100.0
                ));
            }
        }
    }
    let elapsed = start.elapsed();
    within_budget(10, elapsed, Duration::from_secs(120));
    conclude(10, pass, &format!("{} ({elapsed:?})", detail.join("; ")));
}
