//! Coordinate boxes, maps with Jacobians, bump functions and finite differences.
//!
//! Charts are identity coordinates on boxes: a [`Chart`] is a name attached to
//! a [`BoxRegion`]. Complex maps are holomorphic; their Jacobian is the complex
//! derivative, and their domain box lives in the realified coordinates
//! `(re z1, im z1, re z2, ...)`.

mod bump;
mod diff;
mod maps;
mod poly;
mod region;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::scalar::Scalar;

pub use bump::BumpFunction;
pub use diff::{
    c1_distance, default_fd_step, fd_jacobian, jacobian_consistency, local_representative,
    CONSISTENCY_POINTS,
};
pub use maps::{AffineMap, FnMap, Localized, Restricted, Shifted};
pub use poly::{Monomial, PolynomialMap};
pub use region::{BoxRegion, Chart, GridSpec, SAMPLING_WINDOW};

/// A map `F^m -> F^n` with a Jacobian.
pub trait DifferentiableMap<T: Scalar = f64>: Send + Sync {
    fn source_dim(&self) -> usize;
    fn target_dim(&self) -> usize;
    fn eval(&self, z: &DVector<T>) -> DVector<T>;
    /// `n x m` matrix of partial derivatives.
    fn jacobian(&self, z: &DVector<T>) -> DMatrix<T>;
    fn describe(&self) -> String;
    /// Declared domain in real coordinates; `None` means all of `F^m`.
    fn domain(&self) -> Option<&BoxRegion> {
        None
    }
    /// Polynomial form, when the map has one (used by the exact oracle).
    fn as_polynomial(&self) -> Option<PolynomialMap<T>> {
        None
    }
}

pub type MapRef<T = f64> = Arc<dyn DifferentiableMap<T>>;

impl<T: Scalar> fmt::Debug for dyn DifferentiableMap<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "DifferentiableMap({} -> {}: {})",
            self.source_dim(),
            self.target_dim(),
            self.describe()
        )
    }
}

/// Evaluates a real map at a point given as a slice.
pub fn eval_real(f: &dyn DifferentiableMap<f64>, z: &[f64]) -> Vec<f64> {
    f.eval(&DVector::from_column_slice(z)).iter().copied().collect()
}
