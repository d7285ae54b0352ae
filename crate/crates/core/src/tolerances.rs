use serde::{Deserialize, Serialize};

/// Numerical thresholds shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative singular-value threshold for rank decisions.
    pub rank: f64,
    /// Grassmannian equality threshold.
    pub grass: f64,
    /// Orthonormality threshold for stored bases.
    pub ortho: f64,
    /// Residual threshold for stratum membership, scaled by `1 + |y|`.
    pub on_stratum: f64,
    /// Containment residual threshold for condition (a).
    pub a: f64,
    /// Cauchy threshold for tangent-plane convergence.
    pub conv: f64,
    /// Jacobian / finite-difference consistency threshold.
    pub fd: f64,
}

pub const TOL_RANK: f64 = 1e-9;
pub const TOL_GRASS: f64 = 1e-8;
pub const TOL_ORTHO: f64 = 1e-10;

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank: TOL_RANK,
            grass: TOL_GRASS,
            ortho: TOL_ORTHO,
            on_stratum: 1e-9,
            a: 1e-6,
            conv: 1e-6,
            fd: 1e-5,
        }
    }
}
