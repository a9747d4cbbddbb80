//! Simulation and analysis toolkit for online scheduling of jobs that
//! alternate between parallelizable (elastic) and single-server-bound
//! (inelastic) phases on a cluster of unit-speed servers.
//!
//! The crate provides:
//!
//! - a job/phase model with a concave power-law speedup curve
//!   ([`model`], [`speedup`]);
//! - five allocation policies, from recency-sharing to processing-aware
//!   first-come-first-served ([`policy`]);
//! - two equivalent continuous-time engines: an event-by-event reference
//!   that can record full allocation histories, and a pooled virtual-time
//!   engine for large replicated experiments ([`engine`]);
//! - stochastic and fixed-profile workload generators with reproducible
//!   seeding ([`workload`], [`rng`]);
//! - competitive-analysis tooling: parameter feasibility conditions,
//!   competitive-ratio bounds, potential-function evaluation, numeric
//!   jump/drift verification along trace pairs, and exhaustive optimal
//!   search for tiny instances ([`analysis`]);
//! - a replication/aggregation harness with CSV/JSON output
//!   ([`experiment`]).

pub mod analysis;
pub mod engine;
pub mod model;
pub mod policy;
pub mod rng;
pub mod speedup;
pub mod tolerance;
pub mod workload;

pub mod experiment;

pub use engine::{run, run_fast, RecordLevel, Trace};
pub use model::{JobSpec, PhaseKind, PhaseSpec, SystemSnapshot};
pub use policy::Policy;
pub use speedup::Speedup;
