//! Chart-local computations for transversality of maps to stratified sets.
//!
//! The crate is organised bottom-up:
//!
//! * [`subspace`]: field-generic linear subspaces, numeric rank, Grassmannian distance.
//! * [`exact`]: arbitrary-precision rational elimination used as an oracle.
//! * [`geometry`]: boxes, charts, differentiable maps, bump functions, finite differences.
//! * [`strata`]: strata, stratifications, tangent spaces and membership.
//! * [`transversality`]: pointwise and on-compact transversality with the margin `eta`.
//! * [`regularity`]: Whitney condition (a) along tangent-plane sequences.
//! * [`witness`]: the explicit non-transverse perturbation families built from an (a)-fault.
//! * [`neighborhoods`]: weak subbasic neighbourhoods and openness probes.
//! * [`agreement`]: floating decisions against the rational oracle on random linear data.
//! * [`gallery`]: built-in fixtures with their expected outcomes.

pub mod agreement;
pub mod error;
pub mod exact;
pub mod gallery;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod neighborhoods;
pub mod regularity;
pub mod scalar;
pub mod strata;
pub mod subspace;
pub mod tolerances;
pub mod transversality;
pub mod witness;

pub use error::{Error, Result};
pub use geometry::{
    AffineMap, BoxRegion, BumpFunction, Chart, DifferentiableMap, FnMap, GridSpec, Localized,
    MapRef, PolynomialMap,
};
pub use scalar::{Field, Scalar};
pub use strata::{Relation, Stratification, Stratum};
pub use subspace::{RankDecision, Subspace};
pub use tolerances::Tolerances;
pub use transversality::{Reason, TransversalityVerdict};

pub use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;
