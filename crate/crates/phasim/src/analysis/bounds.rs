//! Closed-form competitive-ratio bounds and parameter feasibility.
//!
//! The last-come-first-served policy admits a constant competitive ratio
//! when its parameters (β, θ) together with an analysis constant γ satisfy
//! four inequalities; `check_conditions` evaluates them, `lcfs_bound`
//! assembles the ratio κ = (1+c₁)/γ + c₂ from the minimal admissible
//! constants, and `search_beta` finds a satisfying parameter triple for any
//! speedup exponent. `equi_bound` is the closed-form ratio for the
//! equal-split policy when every job is present at time zero.

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::speedup::Speedup;

/// The four inequalities gating the constant-ratio argument, named by the
/// quantity each one controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionId {
    /// Negative-drift margin while the server pool is saturated:
    /// (1−β)(β−γ)/P(β) > γ^{1−1/α}.
    SaturatedDriftMargin,
    /// Negative-drift margin in the reserved (sequential-light) case:
    /// (1−β)(β−θ−γ)/P(β) > γ^{1−1/α}.
    ReservedDriftMargin,
    /// The rank-weighted term's coefficient c₁ admits a finite minimum.
    Phi1Weight,
    /// The sequential-work term's coefficient c₂ ≥ (1+c₁γ^{1−1/α})/θ.
    Phi2Weight,
}

impl ConditionId {
    pub fn label(&self) -> &'static str {
        match self {
            ConditionId::SaturatedDriftMargin => "saturated_drift_margin",
            ConditionId::ReservedDriftMargin => "reserved_drift_margin",
            ConditionId::Phi1Weight => "phi1_weight",
            ConditionId::Phi2Weight => "phi2_weight",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub id: ConditionId,
    pub satisfied: bool,
    /// Left side of the inequality as evaluated (for the coefficient
    /// conditions, the minimal admissible value).
    pub lhs: f64,
    /// Right side (for the coefficient conditions, 0 when no finite
    /// minimum exists).
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub gamma: f64,
    pub checks: Vec<ConditionCheck>,
    pub all_satisfied: bool,
    /// Minimal admissible c₁ when the reserved-drift margin holds.
    pub min_c1: Option<f64>,
    /// Minimal admissible c₂ at that c₁.
    pub min_c2: Option<f64>,
}

impl ConditionReport {
    pub fn violated(&self) -> Vec<ConditionId> {
        self.checks
            .iter()
            .filter(|c| !c.satisfied)
            .map(|c| c.id)
            .collect()
    }
}

/// Competitive-ratio bound with the parameters it was evaluated at.
/// Fields not used by the producing path are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub alpha: f64,
    pub beta: Option<f64>,
    pub theta: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub kappa: Option<f64>,
    pub feasible: bool,
    pub violated_conditions: Vec<ConditionId>,
}

fn require_alpha(alpha: f64) -> Result<Speedup, AnalysisError> {
    Speedup::new(alpha).map_err(|_| AnalysisError::InvalidAlpha(alpha))
}

/// Evaluates the four constant-ratio inequalities at the given parameters.
/// Out-of-range parameters are reported as violations, not errors; only a
/// non-sensical speedup exponent errors.
pub fn check_conditions(
    alpha: f64,
    beta: f64,
    theta: f64,
    gamma: f64,
) -> Result<ConditionReport, AnalysisError> {
    let f = require_alpha(alpha)?;
    let gamma_pow = gamma.powf(1.0 - 1.0 / alpha);
    let p_beta = f.p(beta);

    let saturated_lhs = (1.0 - beta) * (beta - gamma) / p_beta;
    let reserved_lhs = (1.0 - beta) * (beta - theta - gamma) / p_beta;
    let params_sane =
        beta > 0.0 && beta < 1.0 && theta > 0.0 && gamma > 0.0 && theta + gamma < beta;

    let saturated_ok = params_sane && saturated_lhs > gamma_pow;
    let reserved_ok = params_sane && reserved_lhs > gamma_pow;

    // c₁ has a finite positive minimum exactly when the reserved margin is
    // strict: c₁ ≥ −1/(γ^{1−1/α} − reserved_lhs).
    let min_c1 = if reserved_ok {
        Some(-1.0 / (gamma_pow - reserved_lhs))
    } else {
        None
    };
    let min_c2 = min_c1.map(|c1| (1.0 + c1 * gamma_pow) / theta);

    let checks = vec![
        ConditionCheck {
            id: ConditionId::SaturatedDriftMargin,
            satisfied: saturated_ok,
            lhs: saturated_lhs,
            rhs: gamma_pow,
        },
        ConditionCheck {
            id: ConditionId::ReservedDriftMargin,
            satisfied: reserved_ok,
            lhs: reserved_lhs,
            rhs: gamma_pow,
        },
        ConditionCheck {
            id: ConditionId::Phi1Weight,
            satisfied: min_c1.is_some(),
            lhs: min_c1.unwrap_or(f64::INFINITY),
            rhs: 0.0,
        },
        ConditionCheck {
            id: ConditionId::Phi2Weight,
            satisfied: min_c2.is_some(),
            lhs: min_c2.unwrap_or(f64::INFINITY),
            rhs: 0.0,
        },
    ];
    let all_satisfied = checks.iter().all(|c| c.satisfied);
    Ok(ConditionReport {
        alpha,
        beta,
        theta,
        gamma,
        checks,
        all_satisfied,
        min_c1,
        min_c2,
    })
}

/// Competitive-ratio bound for the last-come-first-served policy:
/// κ = (1+c₁)/γ + c₂ at the minimal admissible c₁, c₂. Infeasible parameters
/// yield `feasible: false` with κ undefined.
pub fn lcfs_bound(
    alpha: f64,
    beta: f64,
    theta: f64,
    gamma: f64,
) -> Result<BoundResult, AnalysisError> {
    let report = check_conditions(alpha, beta, theta, gamma)?;
    let feasible = report.all_satisfied;
    let (c1, c2, kappa) = if feasible {
        let c1 = report.min_c1.expect("feasible report carries c1");
        let c2 = report.min_c2.expect("feasible report carries c2");
        (Some(c1), Some(c2), Some((1.0 + c1) / gamma + c2))
    } else {
        (None, None, None)
    };
    Ok(BoundResult {
        alpha,
        beta: Some(beta),
        theta: Some(theta),
        gamma: Some(gamma),
        delta: None,
        c1,
        c2,
        kappa,
        feasible,
        violated_conditions: report.violated(),
    })
}

/// Inequality that certifies a β (with θ = γ = β²/2) for `search_beta`:
/// (1−β)² > (β/2)^{1−1/α}. Algebraically equivalent to the reserved-drift
/// margin at those parameters.
fn beta_certificate(alpha: f64, beta: f64) -> bool {
    (1.0 - 2.0 * beta + beta * beta) > (beta / 2.0).powf(1.0 - 1.0 / alpha)
}

/// Largest β on a 1e-4 grid in (0,1) satisfying the certificate inequality,
/// returned with θ = γ = β²/2. The triple always passes `check_conditions`.
pub fn search_beta(alpha: f64) -> Result<(f64, f64, f64), AnalysisError> {
    require_alpha(alpha)?;
    const STEP: f64 = 1e-4;
    for k in (1..10_000u32).rev() {
        let beta = k as f64 * STEP;
        if beta_certificate(alpha, beta) {
            let half_sq = beta * beta / 2.0;
            return Ok((beta, half_sq, half_sq));
        }
    }
    // Unreachable for any alpha > 1: the certificate holds as β → 0 because
    // the left side tends to 1 and the right side to 0.
    Err(AnalysisError::InvalidAlpha(alpha))
}

/// Competitive-ratio bound for the equal-split policy with every job present
/// at time zero: μ = [α(1−δ)/δ + (α(1−δ)+δ)/(1−δ)] / (α(1−δ)−1).
pub fn equi_bound(alpha: f64, delta: f64) -> Result<f64, AnalysisError> {
    if !alpha.is_finite() || alpha <= 1.0 {
        return Err(AnalysisError::InvalidAlpha(alpha));
    }
    if !delta.is_finite() || delta <= 0.0 || delta >= 1.0 || alpha * (1.0 - delta) <= 1.0 {
        return Err(AnalysisError::EquiDomain { alpha, delta });
    }
    let a = alpha * (1.0 - delta);
    Ok((a / delta + (a + delta) / (1.0 - delta)) / (a - 1.0))
}

/// Potential weights that prove the equal-split bound: c₁ = α/(α(1−δ)−1)
/// and c₂ = (1+c₁/α)/δ. Same domain as [`equi_bound`].
pub fn equi_weights(alpha: f64, delta: f64) -> Result<(f64, f64), AnalysisError> {
    equi_bound(alpha, delta)?;
    let c1 = alpha / (alpha * (1.0 - delta) - 1.0);
    let c2 = (1.0 + c1 / alpha) / delta;
    Ok((c1, c2))
}

/// δ on a 1e-3 grid minimizing `equi_bound` for the given exponent; returns
/// (δ, μ).
pub fn best_equi_delta(alpha: f64) -> Result<(f64, f64), AnalysisError> {
    if !alpha.is_finite() || alpha <= 1.0 {
        return Err(AnalysisError::InvalidAlpha(alpha));
    }
    const STEP: f64 = 1e-3;
    let mut best: Option<(f64, f64)> = None;
    for k in 1..1000u32 {
        let delta = k as f64 * STEP;
        if let Ok(mu) = equi_bound(alpha, delta) {
            if best.map_or(true, |(_, b)| mu < b) {
                best = Some((delta, mu));
            }
        }
    }
    best.ok_or(AnalysisError::EquiDomain { alpha, delta: 0.0 })
}
