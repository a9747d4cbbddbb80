//! The concave speedup curve mapping a server share to a processing speed.

use serde::{Deserialize, Serialize};

use crate::model::ModelError;

/// Speedup curve P(k) = k^(1/α) with exponent α > 1.
///
/// `p` maps servers to speed, `p_inv` maps speed back to the servers needed,
/// and `q(x) = x^(1−1/α)` is the companion power satisfying `p(x)·q(x) = x`.
/// Fractional shares (including sub-unit ones) are allowed everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Speedup {
    alpha: f64,
}

impl Speedup {
    /// Creates the curve; `alpha` must be finite and strictly greater than 1.
    pub fn new(alpha: f64) -> Result<Self, ModelError> {
        if !alpha.is_finite() || alpha <= 1.0 {
            return Err(ModelError::InvalidAlpha(alpha));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Speed obtained from a share of `servers ≥ 0`.
    #[inline]
    pub fn p(&self, servers: f64) -> f64 {
        debug_assert!(servers >= 0.0, "negative server share {servers}");
        servers.powf(1.0 / self.alpha)
    }

    /// Servers required to sustain `speed ≥ 0`; inverse of [`Speedup::p`].
    #[inline]
    pub fn p_inv(&self, speed: f64) -> f64 {
        debug_assert!(speed >= 0.0, "negative speed {speed}");
        speed.powf(self.alpha)
    }

    /// Companion power q(x) = x^(1−1/α), so that p(x)·q(x) = x.
    #[inline]
    pub fn q(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0, "negative argument {x}");
        x.powf(1.0 - 1.0 / self.alpha)
    }
}
