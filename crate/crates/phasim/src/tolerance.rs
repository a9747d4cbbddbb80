//! Centralized numeric tolerances.
//!
//! Every comparison against a tolerance in this crate goes through one of
//! these constants so the precision contract sits in one place.
//!
//! | constant          | used for                                   | kind     |
//! |-------------------|--------------------------------------------|----------|
//! | `WORK_ABS`        | phase-boundary detection, advance guard    | absolute |
//! | `CAPACITY_REL`    | server-capacity feasibility slack          | relative |
//! | `IDENTITY_REL`    | algebraic identity checks (P/Q round trip) | relative |
//! | `FLOW_REL`        | flow-time vs. ∫n(t)dt identity             | relative |
//! | `CONSERVATION_ABS`| per-job processed-work audit               | absolute |
//! | `DRIFT_REL`       | potential drift vs. analytic bound         | relative |
//! | `JUMP_REL`        | potential jump at events                   | relative |
//! | `MIN_STEP`        | reporting threshold for degenerate steps   | absolute |

/// Absolute work (server·time) tolerance for detecting phase boundaries.
pub const WORK_ABS: f64 = 1e-9;

/// Relative slack allowed on the server-capacity constraint.
pub const CAPACITY_REL: f64 = 1e-9;

/// Relative tolerance for exact algebraic identities evaluated in floats.
pub const IDENTITY_REL: f64 = 1e-12;

/// Relative tolerance for the flow-time identity Σ(d_j − a_j) = ∫n(t)dt.
pub const FLOW_REL: f64 = 1e-6;

/// Absolute tolerance for per-job work-conservation audits.
pub const CONSERVATION_ABS: f64 = 1e-6;

/// Drift checks pass when drift ≤ bound + DRIFT_REL·(1 + |bound|).
pub const DRIFT_REL: f64 = 1e-7;

/// Jump checks pass when jump ≤ JUMP_REL·(1 + |Φ|).
pub const JUMP_REL: f64 = 1e-9;

/// Inter-event steps shorter than this are counted as degenerate.
pub const MIN_STEP: f64 = 1e-12;
