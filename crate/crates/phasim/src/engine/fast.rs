//! Pooled virtual-time engine.
//!
//! Every policy here serves jobs in at most two *pools*, each with one shared
//! speed. Instead of touching every job at every event, each pool keeps a
//! virtual clock `v` that advances by `speed · Δt`; a job joining a pool with
//! remaining work `r` is due when `v` reaches `join_v + r`. Due times live in
//! a lazily-invalidated min-heap, and pool membership is described by small
//! set descriptors over the arrival order (suffixes / prefixes / kinds), so
//! an event only touches the jobs whose membership actually changes.
//! Fenwick trees over arrival order answer the order-statistics queries the
//! descriptors need.
//!
//! Produces the same physics as the reference engine; records events,
//! completions, and aggregate integrals (no per-interval snapshots).

use std::collections::BTreeMap;
use std::collections::BinaryHeap;
use std::sync::Arc;

use crate::engine::{EngineError, Event, EventKind, Trace};
use crate::model::{JobSpec, PhaseKind};
use crate::policy::{
    blind_equi_plan, inelastic_first_plan, lcfs_plan, pa_equi_plan, LcfsPlan, PaEquiPlan, Policy,
};
use crate::speedup::Speedup;
use crate::tolerance;

use super::reference::{sorted_specs, validate_run_inputs};

// ---------------------------------------------------------------------------
// Fenwick tree over the dense arrival order
// ---------------------------------------------------------------------------

struct Fenwick {
    tree: Vec<u32>,
}

impl Fenwick {
    fn new(len: usize) -> Self {
        Self {
            tree: vec![0; len + 1],
        }
    }

    fn add(&mut self, pos: usize, delta: i32) {
        let mut i = pos + 1;
        while i < self.tree.len() {
            self.tree[i] = (self.tree[i] as i64 + delta as i64) as u32;
            i += i & i.wrapping_neg();
        }
    }

    /// Count of set positions in `[0, pos]`.
    fn prefix(&self, pos: usize) -> u32 {
        let mut i = pos + 1;
        let mut sum = 0;
        while i > 0 {
            sum += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        sum
    }

    /// Position of the k-th set element (1-based); panics if k exceeds the
    /// total count.
    fn select(&self, k: u32) -> usize {
        debug_assert!(k >= 1);
        let mut pos = 0usize;
        let mut rem = k;
        let mut mask = (self.tree.len() - 1).next_power_of_two();
        // `pos` walks the implicit prefix-sum tree.
        while mask > 0 {
            let next = pos + mask;
            if next < self.tree.len() && self.tree[next] < rem {
                rem -= self.tree[next];
                pos = next;
            }
            mask >>= 1;
        }
        debug_assert!(pos < self.tree.len() - 1, "select past end");
        pos
    }

    /// Set positions within the dense range `[lo, hi)`, ascending.
    fn collect_range(&self, lo: usize, hi: usize, out: &mut Vec<u32>) {
        if lo >= hi {
            return;
        }
        let below = if lo == 0 { 0 } else { self.prefix(lo - 1) };
        let upto = self.prefix(hi - 1);
        for k in (below + 1)..=upto {
            out.push(self.select(k) as u32);
        }
    }
}

// ---------------------------------------------------------------------------
// Pools and membership descriptors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    key: f64,
    idx: u32,
    gen: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Reversed: BinaryHeap is a max-heap, we need the smallest key first.
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

struct Pool {
    v: f64,
    speed: f64,
    heap: BinaryHeap<HeapEntry>,
    members: usize,
}

impl Pool {
    fn new() -> Self {
        Self {
            v: 0.0,
            speed: 0.0,
            heap: BinaryHeap::new(),
            members: 0,
        }
    }
}

/// Which jobs belong to a pool, phrased over the dense arrival order.
#[derive(Debug, Clone, Copy, PartialEq)]
enum MemberSet {
    Empty,
    /// Every active job.
    All,
    /// Every active job currently in a phase of this kind.
    Kind(PhaseKind),
    /// Active jobs with dense position ≥ cut (the most recent arrivals).
    Suffix { cut: u32 },
    /// Active `kind` jobs with dense position ≥ cut.
    SuffixKind { kind: PhaseKind, cut: u32 },
    /// Active elastic jobs within the global suffix at ≥ cut.
    ElasticSuffix { cut: u32 },
    /// Active `kind` jobs with dense position ≤ cut (the oldest).
    PrefixKind { kind: PhaseKind, cut: u32 },
}

impl MemberSet {
    fn contains(&self, dense: u32, kind: PhaseKind) -> bool {
        match *self {
            MemberSet::Empty => false,
            MemberSet::All => true,
            MemberSet::Kind(k) => kind == k,
            MemberSet::Suffix { cut } => dense >= cut,
            MemberSet::SuffixKind { kind: k, cut } => kind == k && dense >= cut,
            MemberSet::ElasticSuffix { cut } => kind == PhaseKind::Elastic && dense >= cut,
            MemberSet::PrefixKind { kind: k, cut } => kind == k && dense <= cut,
        }
    }

    /// Same structural shape (variant and kind); only cuts may differ.
    fn same_shape(&self, other: &MemberSet) -> bool {
        use MemberSet::*;
        match (self, other) {
            (Empty, Empty) | (All, All) => true,
            (Kind(a), Kind(b)) => a == b,
            (Suffix { .. }, Suffix { .. }) => true,
            (SuffixKind { kind: a, .. }, SuffixKind { kind: b, .. }) => a == b,
            (ElasticSuffix { .. }, ElasticSuffix { .. }) => true,
            (PrefixKind { kind: a, .. }, PrefixKind { kind: b, .. }) => a == b,
            _ => false,
        }
    }
}

struct FJob {
    spec: Arc<JobSpec>,
    phase: usize,
    kind: PhaseKind,
    /// Remaining work in the current phase, valid while not pooled.
    rem: f64,
    /// Completion key in the pool's virtual time, valid while pooled.
    key: f64,
    pool: Option<u8>,
    gen: u32,
    active: bool,
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

struct FastState<'a> {
    jobs: Vec<FJob>,
    pools: [Pool; 2],
    act: Fenwick,
    ela: Fenwick,
    ine: Fenwick,
    n: usize,
    n_e: usize,
    n_i: usize,
    servers: f64,
    f: &'a Speedup,
    policy: Policy,
    prev_sets: [MemberSet; 2],
    /// Previous explicit FCFS assignment: (dense, pool).
    prev_explicit: Vec<(u32, u8)>,
}

impl<'a> FastState<'a> {
    fn settle(&mut self, idx: usize) {
        let job = &mut self.jobs[idx];
        if let Some(p) = job.pool {
            let pool = &mut self.pools[p as usize];
            job.rem = (job.key - pool.v).max(0.0);
            pool.members -= 1;
            job.pool = None;
            job.gen = job.gen.wrapping_add(1);
        }
    }

    fn join(&mut self, idx: usize, pid: u8) {
        let job = &mut self.jobs[idx];
        debug_assert!(job.pool.is_none());
        let pool = &mut self.pools[pid as usize];
        job.pool = Some(pid);
        job.key = pool.v + job.rem;
        job.gen = job.gen.wrapping_add(1);
        pool.members += 1;
        pool.heap.push(HeapEntry {
            key: job.key,
            idx: idx as u32,
            gen: job.gen,
        });
    }

    /// Moves a job to its target pool (or out of any pool).
    fn reassign(&mut self, idx: usize, target: Option<u8>) {
        if self.jobs[idx].pool == target {
            return;
        }
        self.settle(idx);
        if let Some(p) = target {
            self.join(idx, p);
        }
    }

    fn classify(&self, idx: usize, sets: &[MemberSet; 2]) -> Option<u8> {
        let job = &self.jobs[idx];
        if sets[0].contains(idx as u32, job.kind) {
            Some(0)
        } else if sets[1].contains(idx as u32, job.kind) {
            Some(1)
        } else {
            None
        }
    }

    fn activate(&mut self, idx: usize) {
        let job = &mut self.jobs[idx];
        debug_assert!(!job.active);
        job.active = true;
        self.act.add(idx, 1);
        match job.kind {
            PhaseKind::Elastic => {
                self.ela.add(idx, 1);
                self.n_e += 1;
            }
            PhaseKind::Inelastic => {
                self.ine.add(idx, 1);
                self.n_i += 1;
            }
        }
        self.n += 1;
    }

    fn deactivate(&mut self, idx: usize) {
        let job = &mut self.jobs[idx];
        debug_assert!(job.active && job.pool.is_none());
        job.active = false;
        self.act.add(idx, -1);
        match job.kind {
            PhaseKind::Elastic => {
                self.ela.add(idx, -1);
                self.n_e -= 1;
            }
            PhaseKind::Inelastic => {
                self.ine.add(idx, -1);
                self.n_i -= 1;
            }
        }
        self.n -= 1;
    }

    fn flip_kind(&mut self, idx: usize, new_kind: PhaseKind) {
        let old = self.jobs[idx].kind;
        if old == new_kind {
            return;
        }
        match old {
            PhaseKind::Elastic => {
                self.ela.add(idx, -1);
                self.n_e -= 1;
            }
            PhaseKind::Inelastic => {
                self.ine.add(idx, -1);
                self.n_i -= 1;
            }
        }
        match new_kind {
            PhaseKind::Elastic => {
                self.ela.add(idx, 1);
                self.n_e += 1;
            }
            PhaseKind::Inelastic => {
                self.ine.add(idx, 1);
                self.n_i += 1;
            }
        }
        self.jobs[idx].kind = new_kind;
    }

    /// Dense cut so that the `m` most recent active jobs are `dense ≥ cut`.
    fn suffix_cut(&self, m: usize) -> u32 {
        debug_assert!(m >= 1 && m <= self.n);
        self.act.select((self.n - m + 1) as u32) as u32
    }

    fn suffix_cut_kind(&self, kind: PhaseKind, c: usize) -> u32 {
        let (tree, total) = match kind {
            PhaseKind::Elastic => (&self.ela, self.n_e),
            PhaseKind::Inelastic => (&self.ine, self.n_i),
        };
        debug_assert!(c >= 1 && c <= total);
        tree.select((total - c + 1) as u32) as u32
    }

    fn prefix_cut_kind(&self, kind: PhaseKind, c: usize) -> u32 {
        let (tree, total) = match kind {
            PhaseKind::Elastic => (&self.ela, self.n_e),
            PhaseKind::Inelastic => (&self.ine, self.n_i),
        };
        debug_assert!(c >= 1 && c <= total);
        tree.select(c as u32) as u32
    }

    /// Pool descriptors and speeds for the current counts (count-based
    /// policies only; FCFS uses the explicit path).
    fn plan(&self) -> ([MemberSet; 2], [f64; 2]) {
        match self.policy {
            Policy::FractionalLcfs { beta, theta } => {
                match lcfs_plan(
                    self.n,
                    self.n_e,
                    self.n_i,
                    self.servers,
                    beta,
                    theta,
                    self.f,
                ) {
                    LcfsPlan::Saturated { m, speed } => (
                        [
                            MemberSet::Suffix {
                                cut: self.suffix_cut(m),
                            },
                            MemberSet::Empty,
                        ],
                        [speed, 0.0],
                    ),
                    LcfsPlan::InelasticHeavy {
                        c,
                        m_e,
                        elastic_speed,
                    } => {
                        let a = if c >= 1 {
                            MemberSet::SuffixKind {
                                kind: PhaseKind::Inelastic,
                                cut: self.suffix_cut_kind(PhaseKind::Inelastic, c),
                            }
                        } else {
                            MemberSet::Empty
                        };
                        let b = if m_e >= 1 {
                            MemberSet::SuffixKind {
                                kind: PhaseKind::Elastic,
                                cut: self.suffix_cut_kind(PhaseKind::Elastic, m_e),
                            }
                        } else {
                            // m_e = ⌈β·n_e⌉ = 0 only when no elastic job is
                            // active, so any cut keeps the set vacuously
                            // empty while preserving the pool shape.
                            MemberSet::SuffixKind {
                                kind: PhaseKind::Elastic,
                                cut: 0,
                            }
                        };
                        ([a, b], [1.0, elastic_speed])
                    }
                    LcfsPlan::InelasticLight { m, speed } => (
                        [
                            MemberSet::ElasticSuffix {
                                cut: self.suffix_cut(m),
                            },
                            MemberSet::Empty,
                        ],
                        [speed, 0.0],
                    ),
                }
            }
            Policy::PaEqui { delta } => {
                match pa_equi_plan(
                    self.n,
                    self.n_e,
                    self.n_i,
                    self.servers,
                    delta,
                    self.f,
                ) {
                    PaEquiPlan::Saturated { speed, .. } => {
                        ([MemberSet::All, MemberSet::Empty], [speed, 0.0])
                    }
                    PaEquiPlan::InelasticHeavy { elastic_speed } => (
                        [
                            MemberSet::Kind(PhaseKind::Inelastic),
                            // Stays shape-stable when n_e hits 0: the kind
                            // filter already empties the set.
                            MemberSet::Kind(PhaseKind::Elastic),
                        ],
                        [1.0, elastic_speed],
                    ),
                    PaEquiPlan::InelasticLight { elastic_speed } => (
                        [MemberSet::Kind(PhaseKind::Elastic), MemberSet::Empty],
                        [elastic_speed, 0.0],
                    ),
                }
            }
            Policy::BlindEqui => {
                let (_, e_speed, i_speed) = blind_equi_plan(self.n, self.servers, self.f);
                (
                    [
                        MemberSet::Kind(PhaseKind::Elastic),
                        MemberSet::Kind(PhaseKind::Inelastic),
                    ],
                    [e_speed, i_speed],
                )
            }
            Policy::InelasticFirst => {
                let (c, elastic_speed) = inelastic_first_plan(self.n_e, self.n_i, self.servers, self.f);
                // Keep the pool shapes stable across events even when they
                // are momentarily empty or stalled: membership in a
                // zero-speed or vacuous pool is harmless, while a shape
                // change forces a full rescan of every active job.
                let a = if c >= 1 {
                    MemberSet::PrefixKind {
                        kind: PhaseKind::Inelastic,
                        cut: self.prefix_cut_kind(PhaseKind::Inelastic, c),
                    }
                } else if self.n_i == 0 {
                    // No inelastic jobs: the kind filter alone empties the
                    // set, so any cut preserves both meaning and shape.
                    MemberSet::PrefixKind {
                        kind: PhaseKind::Inelastic,
                        cut: 0,
                    }
                } else {
                    // Fractional clusters (N < 1) cannot seat any inelastic
                    // job even though some are waiting.
                    MemberSet::Empty
                };
                let b = MemberSet::Kind(PhaseKind::Elastic);
                ([a, b], [1.0, elastic_speed])
            }
            Policy::PaFcfs => unreachable!("FCFS uses the explicit path"),
        }
    }

    /// FCFS capacity scan over the oldest active jobs: pool 0 is the
    /// unit-speed set, pool 1 holds the single job that takes the residue.
    /// Returns assignments and the residue pool's speed.
    fn fcfs_assignments(&self, out: &mut Vec<(u32, u8)>) -> f64 {
        out.clear();
        let mut remaining = self.servers;
        let mut residue_speed = 0.0;
        let mut k = 1u32;
        while remaining > 0.0 && k as usize <= self.n {
            let dense = self.act.select(k);
            let kind = self.jobs[dense].kind;
            match kind {
                PhaseKind::Inelastic => {
                    if remaining >= 1.0 {
                        remaining -= 1.0;
                        out.push((dense as u32, 0));
                    } else {
                        residue_speed = self.f.p(remaining).min(1.0);
                        out.push((dense as u32, 1));
                        remaining = 0.0;
                    }
                }
                PhaseKind::Elastic => {
                    residue_speed = self.f.p(remaining);
                    out.push((dense as u32, 1));
                    remaining = 0.0;
                }
            }
            k += 1;
        }
        residue_speed
    }

    /// Rebuilds a pool's heap, dropping stale entries.
    fn compact_heap(&mut self, pid: usize) {
        let pool = &mut self.pools[pid];
        if pool.heap.len() <= 4 * pool.members + 64 {
            return;
        }
        let entries: Vec<HeapEntry> = pool.heap.drain().collect();
        for e in entries {
            let job = &self.jobs[e.idx as usize];
            if job.gen == e.gen {
                self.pools[pid].heap.push(e);
            }
        }
    }
}

/// Runs `policy` over the workload until every job completes (pooled
/// virtual-time engine; lean trace).
pub fn run_fast(
    workload: &[JobSpec],
    policy: &Policy,
    servers: f64,
    f: &Speedup,
) -> Result<Trace, EngineError> {
    validate_run_inputs(policy, servers)?;
    let specs = sorted_specs(workload)?;
    let total = specs.len();

    let jobs: Vec<FJob> = specs
        .iter()
        .map(|s| FJob {
            spec: s.clone(),
            phase: 0,
            kind: s.phases[0].kind,
            rem: s.phases[0].size,
            key: 0.0,
            pool: None,
            gen: 0,
            active: false,
        })
        .collect();

    let mut st = FastState {
        jobs,
        pools: [Pool::new(), Pool::new()],
        act: Fenwick::new(total),
        ela: Fenwick::new(total),
        ine: Fenwick::new(total),
        n: 0,
        n_e: 0,
        n_i: 0,
        servers,
        f,
        policy: *policy,
        prev_sets: [MemberSet::Empty, MemberSet::Empty],
        prev_explicit: Vec::new(),
    };

    let mut events: Vec<Event> = Vec::new();
    let mut completions: BTreeMap<u64, f64> = BTreeMap::new();
    let mut flow_time = 0.0;
    let mut integral_n = 0.0;
    let mut clamped_steps = 0u64;
    let mut pending = 0usize;
    let mut t = 0.0;

    let mut touched: Vec<u32> = Vec::new();
    let mut range_buf: Vec<u32> = Vec::new();
    let mut arrived: Vec<u64> = Vec::new();
    let mut phase_done: Vec<u64> = Vec::new();
    let mut job_done: Vec<u64> = Vec::new();
    let mut new_explicit: Vec<(u32, u8)> = Vec::new();

    while pending < total || st.n > 0 {
        if st.n == 0 {
            t = specs[pending].arrival;
        }

        // Earliest completion across pools.
        let mut t_next = f64::INFINITY;
        for pid in 0..2 {
            loop {
                let Some(top) = st.pools[pid].heap.peek().copied() else {
                    break;
                };
                if st.jobs[top.idx as usize].gen != top.gen {
                    st.pools[pid].heap.pop();
                    continue;
                }
                let pool = &st.pools[pid];
                if pool.speed > 0.0 {
                    let due = t + (top.key - pool.v).max(0.0) / pool.speed;
                    if due < t_next {
                        t_next = due;
                    }
                }
                break;
            }
        }
        if pending < total {
            t_next = t_next.min(specs[pending].arrival);
        }
        if !t_next.is_finite() {
            return Err(EngineError::Livelock {
                time: t,
                active: st.n,
            });
        }

        let dt = (t_next - t).max(0.0);
        if dt > 0.0 && dt < tolerance::MIN_STEP {
            clamped_steps += 1;
        }
        integral_n += st.n as f64 * dt;
        for pool in st.pools.iter_mut() {
            pool.v += pool.speed * dt;
        }
        t = t_next;

        touched.clear();
        arrived.clear();
        phase_done.clear();
        job_done.clear();

        // Due phase boundaries in both pools.
        for pid in 0..2 {
            loop {
                let Some(top) = st.pools[pid].heap.peek().copied() else {
                    break;
                };
                if st.jobs[top.idx as usize].gen != top.gen {
                    st.pools[pid].heap.pop();
                    continue;
                }
                let pool = &st.pools[pid];
                if pool.speed <= 0.0 || top.key - pool.v > tolerance::WORK_ABS {
                    break;
                }
                st.pools[pid].heap.pop();
                let idx = top.idx as usize;
                st.settle(idx);
                let job = &mut st.jobs[idx];
                job.rem = 0.0;
                job.phase += 1;
                if job.phase == job.spec.phases.len() {
                    let id = job.spec.id;
                    let arrival = job.spec.arrival;
                    st.deactivate(idx);
                    completions.insert(id, t);
                    flow_time += t - arrival;
                    job_done.push(id);
                } else {
                    let next = job.spec.phases[job.phase];
                    job.rem = next.size;
                    let id = job.spec.id;
                    let new_kind = next.kind;
                    st.flip_kind(idx, new_kind);
                    phase_done.push(id);
                    touched.push(idx as u32);
                }
            }
        }

        // Arrivals at this instant.
        while pending < total && specs[pending].arrival == t {
            st.activate(pending);
            arrived.push(specs[pending].id);
            touched.push(pending as u32);
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

        // Re-plan memberships and speeds.
        if st.n == 0 {
            st.prev_sets = [MemberSet::Empty, MemberSet::Empty];
            st.prev_explicit.clear();
            st.pools[0].speed = 0.0;
            st.pools[1].speed = 0.0;
            debug_assert_eq!(st.pools[0].members + st.pools[1].members, 0);
            continue;
        }

        if st.policy == Policy::PaFcfs {
            let residue_speed = st.fcfs_assignments(&mut new_explicit);
            // Jobs dropped from the served set.
            for i in 0..st.prev_explicit.len() {
                let (dense, _) = st.prev_explicit[i];
                if st.jobs[dense as usize].active
                    && !new_explicit.iter().any(|&(d, _)| d == dense)
                {
                    st.reassign(dense as usize, None);
                }
            }
            for i in 0..new_explicit.len() {
                let (dense, pid) = new_explicit[i];
                st.reassign(dense as usize, Some(pid));
            }
            std::mem::swap(&mut st.prev_explicit, &mut new_explicit);
            st.pools[0].speed = 1.0;
            st.pools[1].speed = residue_speed;
        } else {
            let (sets, speeds) = st.plan();
            let full = !sets[0].same_shape(&st.prev_sets[0])
                || !sets[1].same_shape(&st.prev_sets[1]);
            if full {
                for k in 1..=st.n {
                    let dense = st.act.select(k as u32);
                    let target = st.classify(dense, &sets);
                    st.reassign(dense, target);
                }
            } else {
                for pid in 0..2 {
                    let (old_cut, new_cut) = match (st.prev_sets[pid], sets[pid]) {
                        (MemberSet::Suffix { cut: a }, MemberSet::Suffix { cut: b })
                        | (
                            MemberSet::ElasticSuffix { cut: a },
                            MemberSet::ElasticSuffix { cut: b },
                        )
                        | (
                            MemberSet::SuffixKind { cut: a, .. },
                            MemberSet::SuffixKind { cut: b, .. },
                        )
                        | (
                            MemberSet::PrefixKind { cut: a, .. },
                            MemberSet::PrefixKind { cut: b, .. },
                        ) => (a, b),
                        _ => continue,
                    };
                    if old_cut == new_cut {
                        continue;
                    }
                    let lo = old_cut.min(new_cut) as usize;
                    // Prefix cuts are inclusive on the right, suffix cuts
                    // exclusive below; widening by one position on the high
                    // side covers both conventions.
                    let hi = (old_cut.max(new_cut) as usize + 1).min(st.jobs.len());
                    range_buf.clear();
                    let tree = match sets[pid] {
                        MemberSet::Suffix { .. } => &st.act,
                        MemberSet::ElasticSuffix { .. } => &st.ela,
                        MemberSet::SuffixKind {
                            kind: PhaseKind::Elastic,
                            ..
                        } => &st.ela,
                        MemberSet::SuffixKind { .. } => &st.ine,
                        MemberSet::PrefixKind {
                            kind: PhaseKind::Elastic,
                            ..
                        } => &st.ela,
                        MemberSet::PrefixKind { .. } => &st.ine,
                        _ => unreachable!(),
                    };
                    tree.collect_range(lo, hi, &mut range_buf);
                    for i in 0..range_buf.len() {
                        let dense = range_buf[i] as usize;
                        let target = st.classify(dense, &sets);
                        st.reassign(dense, target);
                    }
                }
            }
            for i in 0..touched.len() {
                let dense = touched[i] as usize;
                if st.jobs[dense].active {
                    let target = st.classify(dense, &sets);
                    st.reassign(dense, target);
                }
            }
            st.prev_sets = sets;
            st.pools[0].speed = speeds[0];
            st.pools[1].speed = speeds[1];
        }

        st.compact_heap(0);
        st.compact_heap(1);
    }

    Ok(Trace {
        events,
        intervals: None,
        completions,
        flow_time,
        integral_n,
        clamped_steps,
        end_time: t,
    })
}
