//! Strata, stratifications, membership and tangent spaces.
//!
//! A stratum is either the regular zero set of a constraint map cut down by
//! strict inequalities (`Implicit`), or the image of an immersion restricted to
//! an open parameter box (`Parametric`).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AffineMap, BoxRegion, DifferentiableMap, MapRef, PolynomialMap};
use crate::scalar::{from_real_coords, real_coords, Field, Scalar};
use crate::subspace::{numeric_rank, Subspace};
use crate::tolerances::TOL_RANK;

/// Comparison of a scalar constraint value against zero.
///
/// Orderings compare the real part; `Ne` compares the modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = ">", alias = "gt")]
    Gt,
    #[serde(rename = ">=", alias = "ge")]
    Ge,
    #[serde(rename = "<", alias = "lt")]
    Lt,
    #[serde(rename = "<=", alias = "le")]
    Le,
    #[serde(rename = "!=", alias = "ne")]
    Ne,
}

impl Relation {
    pub fn holds<T: Scalar>(self, v: T) -> bool {
        let re = v.real();
        match self {
            Relation::Gt => re > 0.0,
            Relation::Ge => re >= 0.0,
            Relation::Lt => re < 0.0,
            Relation::Le => re <= 0.0,
            Relation::Ne => v.modulus() != 0.0,
        }
    }
}

/// `map(y) relation 0` with `map: F^n -> F`.
#[derive(Debug, Clone)]
pub struct RegionConstraint<T: Scalar = f64> {
    pub map: MapRef<T>,
    pub relation: Relation,
}

impl<T: Scalar> RegionConstraint<T> {
    pub fn new(map: impl DifferentiableMap<T> + 'static, relation: Relation) -> Self {
        Self {
            map: Arc::new(map),
            relation,
        }
    }

    fn value(&self, y: &DVector<T>) -> T {
        self.map.eval(y)[0]
    }

    pub fn holds(&self, y: &DVector<T>) -> bool {
        self.relation.holds(self.value(y))
    }

    /// Holds with at least [`SAMPLE_REGION_MARGIN`] to spare.
    fn holds_robustly(&self, y: &DVector<T>) -> bool {
        let v = self.value(y);
        let shifted = match self.relation {
            Relation::Gt | Relation::Ge => v - T::from_real(SAMPLE_REGION_MARGIN),
            Relation::Lt | Relation::Le => v + T::from_real(SAMPLE_REGION_MARGIN),
            Relation::Ne => return v.modulus() > SAMPLE_REGION_MARGIN,
        };
        self.relation.holds(shifted)
    }
}

/// Sampled interior points keep this distance (in constraint value) from the
/// region boundary, so frontier rounding does not count as overlap.
pub const SAMPLE_REGION_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone)]
pub enum Representation<T: Scalar = f64> {
    /// `{ y : g(y) = 0, region(y) }` with `g: F^n -> F^(n-d)`.
    Implicit {
        constraint: MapRef<T>,
        region: Vec<RegionConstraint<T>>,
    },
    /// `psi(open param_box)` with `psi: F^d -> F^n` an immersion.
    Parametric { map: MapRef<T>, param_box: BoxRegion },
}

#[derive(Debug, Clone)]
pub struct Stratum<T: Scalar = f64> {
    pub name: String,
    pub ambient_dim: usize,
    pub dim: usize,
    pub repr: Representation<T>,
}

const NEWTON_ITERS: usize = 60;
const GN_SEEDS_KEPT: usize = 6;

impl<T: Scalar> Stratum<T> {
    pub fn implicit(
        name: impl Into<String>,
        constraint: MapRef<T>,
        region: Vec<RegionConstraint<T>>,
    ) -> Self {
        let n = constraint.source_dim();
        assert!(constraint.target_dim() <= n, "constraint has more equations than unknowns");
        for r in &region {
            assert_eq!(r.map.source_dim(), n);
            assert_eq!(r.map.target_dim(), 1);
        }
        Self {
            name: name.into(),
            ambient_dim: n,
            dim: n - constraint.target_dim(),
            repr: Representation::Implicit { constraint, region },
        }
    }

    pub fn parametric(name: impl Into<String>, map: MapRef<T>, param_box: BoxRegion) -> Self {
        assert_eq!(param_box.dim(), map.source_dim() * T::COMPONENTS);
        Self {
            name: name.into(),
            ambient_dim: map.target_dim(),
            dim: map.source_dim(),
            repr: Representation::Parametric { map, param_box },
        }
    }

    /// Open subset of `F^n` cut out by the region constraints.
    pub fn open(name: impl Into<String>, n: usize, region: Vec<RegionConstraint<T>>) -> Self {
        let g: MapRef<T> = Arc::new(PolynomialMap::<T>::new(n, Vec::new()).expect("empty map"));
        Self::implicit(name, g, region)
    }

    /// A linear subspace (intersected with the region), written as `Q^H y = 0`
    /// for an orthonormal basis `Q` of its complement.
    pub fn linear(name: impl Into<String>, subspace: &Subspace<T>, region: Vec<RegionConstraint<T>>) -> Self {
        let q = subspace.orthogonal_complement();
        let g: MapRef<T> = Arc::new(AffineMap::linear(q.basis().adjoint()));
        Self::implicit(name, g, region)
    }

    pub fn field(&self) -> Field {
        T::FIELD
    }

    pub fn codim(&self) -> usize {
        self.ambient_dim - self.dim
    }

    fn check_point(&self, y: &DVector<T>) -> Result<()> {
        if y.len() != self.ambient_dim {
            return Err(Error::DimensionMismatch(format!(
                "point has dimension {}, stratum `{}` lives in dimension {}",
                y.len(),
                self.name,
                self.ambient_dim
            )));
        }
        Ok(())
    }

    /// Membership test; `Inconclusive` when no Gauss-Newton run converges on a
    /// parametric stratum.
    pub fn on_stratum(&self, y: &DVector<T>, tol: f64) -> Result<bool> {
        self.check_point(y)?;
        let scale = tol * (1.0 + y.norm());
        match &self.repr {
            Representation::Implicit { constraint, region } => {
                Ok(constraint.eval(y).norm() <= scale && region.iter().all(|r| r.holds(y)))
            }
            Representation::Parametric { .. } => {
                let loc = self.locate(y)?;
                Ok(loc.residual <= scale && loc.inside)
            }
        }
    }

    /// Tangent space at a point of the stratum.
    pub fn tangent_at(&self, y: &DVector<T>, tol: f64) -> Result<Subspace<T>> {
        self.check_point(y)?;
        let singular = |detail: String| Error::SingularPoint {
            stratum: self.name.clone(),
            detail,
        };
        match &self.repr {
            Representation::Implicit { constraint, region } => {
                let scale = tol * (1.0 + y.norm());
                if constraint.eval(y).norm() > scale || !region.iter().all(|r| r.holds(y)) {
                    return Err(Error::NotOnStratum(self.name.clone()));
                }
                let c = self.codim();
                if c == 0 {
                    return Ok(Subspace::full(self.ambient_dim));
                }
                let dg = constraint.jacobian(y);
                let rd = numeric_rank(&dg, TOL_RANK);
                if !rd.conclusive || rd.numeric_rank != c {
                    return Err(singular(format!(
                        "constraint Jacobian has numeric rank {} (expected {c}, conclusive: {})",
                        rd.numeric_rank, rd.conclusive
                    )));
                }
                // rows r of Dg vanish on v  <=>  v is orthogonal to the columns of Dg^H
                Ok(Subspace::from_spanning(&dg.adjoint()).orthogonal_complement())
            }
            Representation::Parametric { map, .. } => {
                let loc = self.locate(y)?;
                if loc.residual > tol * (1.0 + y.norm()) || !loc.inside {
                    return Err(Error::NotOnStratum(self.name.clone()));
                }
                let dpsi = map.jacobian(&loc.param);
                let rd = numeric_rank(&dpsi, TOL_RANK);
                if !rd.conclusive || rd.numeric_rank != self.dim {
                    return Err(singular(format!(
                        "parametrisation has numeric rank {} (expected {}, conclusive: {})",
                        rd.numeric_rank, self.dim, rd.conclusive
                    )));
                }
                Ok(Subspace::from_spanning(&dpsi))
            }
        }
    }

    /// Distance from `y` to a foot point in the closure of the stratum. Zero on
    /// the stratum; an upper bound for the true distance elsewhere.
    pub fn clearance(&self, y: &DVector<T>) -> Result<f64> {
        self.check_point(y)?;
        match &self.repr {
            Representation::Implicit { constraint, region } => {
                match project_implicit(constraint, region, y) {
                    Some(q) => Ok((y - q).norm()),
                    None => Err(Error::Inconclusive(format!(
                        "projection onto `{}` did not converge from {:?}",
                        self.name,
                        real_coords(y)
                    ))),
                }
            }
            Representation::Parametric { map, param_box } => {
                let best = seeds(map.as_ref(), param_box, y)
                    .into_iter()
                    .filter_map(|t| gauss_newton(map.as_ref(), param_box, y, t, true))
                    .map(|(t, _)| (map.eval(&t) - y).norm())
                    .fold(f64::INFINITY, f64::min);
                if best.is_finite() {
                    Ok(best)
                } else {
                    Err(Error::Inconclusive(format!(
                        "no Gauss-Newton seed converged for `{}`",
                        self.name
                    )))
                }
            }
        }
    }

    /// Nearest parameter found by Gauss-Newton from grid seeds.
    pub fn locate(&self, y: &DVector<T>) -> Result<Location<T>> {
        let Representation::Parametric { map, param_box } = &self.repr else {
            return Err(Error::InvalidOperands(format!(
                "stratum `{}` is not parametric",
                self.name
            )));
        };
        let mut best: Option<Location<T>> = None;
        for t in seeds(map.as_ref(), param_box, y) {
            if let Some((param, _)) = gauss_newton(map.as_ref(), param_box, y, t, false) {
                let residual = (map.eval(&param) - y).norm();
                let inside = param_box.contains_interior(&real_coords(&param));
                let better = best.as_ref().is_none_or(|b| {
                    (inside && !b.inside) || (inside == b.inside && residual < b.residual)
                });
                if better {
                    best = Some(Location {
                        param,
                        residual,
                        inside,
                    });
                }
            }
        }
        best.ok_or_else(|| {
            Error::Inconclusive(format!(
                "no Gauss-Newton seed converged for `{}` at {:?}",
                self.name,
                real_coords(y)
            ))
        })
    }

    /// Points on the stratum for sampling-based checks, drawn from `window`
    /// (ambient box for implicit strata, parameter grid for parametric ones).
    pub fn sample_points(&self, window: &BoxRegion, per_axis: usize) -> Vec<DVector<T>> {
        match &self.repr {
            Representation::Implicit { constraint, region } => window
                .interior_grid(per_axis)
                .into_iter()
                .filter_map(|p| {
                    let y: DVector<T> = from_real_coords(&p);
                    let q = newton_project(constraint.as_ref(), &[], &y)?;
                    region.iter().all(|r| r.holds_robustly(&q)).then_some(q)
                })
                .collect(),
            Representation::Parametric { map, param_box } => param_box
                .interior_grid(per_axis)
                .into_iter()
                .map(|p| map.eval(&from_real_coords(&p)))
                .collect(),
        }
    }

    /// Points in the closure but (typically) outside the stratum: boundary
    /// foot points of the region, or images of the parameter-box faces.
    pub fn frontier_points(&self, window: &BoxRegion, per_axis: usize) -> Vec<DVector<T>> {
        match &self.repr {
            Representation::Implicit { constraint, region } => {
                let mut out = Vec::new();
                for (i, _) in region.iter().enumerate() {
                    for p in window.interior_grid(per_axis) {
                        let y: DVector<T> = from_real_coords(&p);
                        let active = [region[i].map.clone()];
                        if let Some(q) = newton_project(constraint.as_ref(), &active, &y) {
                            let others_ok = region
                                .iter()
                                .enumerate()
                                .all(|(j, r)| j == i || r.holds(&q));
                            if others_ok {
                                out.push(q);
                            }
                        }
                    }
                }
                out
            }
            Representation::Parametric { map, param_box } => {
                let bounds = param_box.sampling_bounds(crate::geometry::SAMPLING_WINDOW);
                let mut out = Vec::new();
                for p in param_box.grid(per_axis) {
                    let on_face = p.iter().enumerate().any(|(i, &x)| {
                        (param_box.lo()[i].is_some() && x == bounds[i].0)
                            || (param_box.hi()[i].is_some() && x == bounds[i].1)
                    });
                    if on_face {
                        out.push(map.eval(&from_real_coords(&p)));
                    }
                }
                out
            }
        }
    }
}

/// Result of locating a point on a parametric stratum.
#[derive(Debug, Clone)]
pub struct Location<T: Scalar> {
    pub param: DVector<T>,
    pub residual: f64,
    /// Parameter lies in the open parameter box.
    pub inside: bool,
}

fn least_squares<T: Scalar>(j: &DMatrix<T>, r: &DVector<T>) -> Option<DVector<T>> {
    Some(crate::linalg::least_squares(j, r, 1e-13))
}

/// Minimal-norm Newton iteration onto `{ g = 0, h_i = 0 }`.
fn newton_project<T: Scalar>(
    g: &dyn DifferentiableMap<T>,
    active: &[MapRef<T>],
    y: &DVector<T>,
) -> Option<DVector<T>> {
    let n = y.len();
    let rows = g.target_dim() + active.len();
    if rows == 0 {
        return Some(y.clone());
    }
    let stack = |q: &DVector<T>| -> (DVector<T>, DMatrix<T>) {
        let mut f = DVector::zeros(rows);
        let mut jac = DMatrix::zeros(rows, n);
        let gv = g.eval(q);
        let gj = g.jacobian(q);
        let k = g.target_dim();
        f.rows_mut(0, k).copy_from(&gv);
        jac.rows_mut(0, k).copy_from(&gj);
        for (i, h) in active.iter().enumerate() {
            f[k + i] = h.eval(q)[0];
            jac.row_mut(k + i).copy_from(&h.jacobian(q).row(0));
        }
        (f, jac)
    };
    let mut q = y.clone();
    for _ in 0..NEWTON_ITERS {
        let (f, jac) = stack(&q);
        if f.norm() <= 1e-14 * (1.0 + q.norm()) {
            return Some(q);
        }
        let step = least_squares(&jac, &f)?;
        q -= &step;
        if !q.iter().all(|c| c.modulus().is_finite()) {
            return None;
        }
        if step.norm() <= 1e-15 * (1.0 + q.norm()) {
            let (f, _) = stack(&q);
            return (f.norm() <= 1e-10 * (1.0 + q.norm())).then_some(q);
        }
    }
    let (f, _) = stack(&q);
    (f.norm() <= 1e-10 * (1.0 + q.norm())).then_some(q)
}

/// Projects onto the zero set, then onto the boundaries of violated region
/// constraints until the foot point satisfies the rest.
fn project_implicit<T: Scalar>(
    g: &MapRef<T>,
    region: &[RegionConstraint<T>],
    y: &DVector<T>,
) -> Option<DVector<T>> {
    let mut active: Vec<usize> = Vec::new();
    loop {
        let maps: Vec<MapRef<T>> = active.iter().map(|&i| region[i].map.clone()).collect();
        let q = newton_project(g.as_ref(), &maps, y)?;
        let violated: Vec<usize> = (0..region.len())
            .filter(|i| !active.contains(i) && !region[*i].holds(&q))
            .collect();
        if violated.is_empty() {
            return Some(q);
        }
        active.extend(violated);
    }
}

fn seeds<T: Scalar>(psi: &dyn DifferentiableMap<T>, param_box: &BoxRegion, y: &DVector<T>) -> Vec<DVector<T>> {
    let d = param_box.dim().max(1);
    let per_axis = ((4000f64).powf(1.0 / d as f64).floor() as usize).clamp(3, 41);
    let mut cand: Vec<(f64, DVector<T>)> = param_box
        .interior_grid(per_axis)
        .into_iter()
        .map(|p| {
            let t: DVector<T> = from_real_coords(&p);
            ((psi.eval(&t) - y).norm(), t)
        })
        .collect();
    cand.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    cand.into_iter().take(GN_SEEDS_KEPT).map(|(_, t)| t).collect()
}

fn clamp_to_box<T: Scalar>(t: &DVector<T>, b: &BoxRegion) -> DVector<T> {
    let mut c = real_coords(t);
    for (i, x) in c.iter_mut().enumerate() {
        if let Some(l) = b.lo()[i] {
            *x = x.max(l);
        }
        if let Some(h) = b.hi()[i] {
            *x = x.min(h);
        }
    }
    from_real_coords(&c)
}

/// Gauss-Newton on `|psi(t) - y|^2`; returns the parameter and the iteration
/// count when the step size converges.
fn gauss_newton<T: Scalar>(
    psi: &dyn DifferentiableMap<T>,
    param_box: &BoxRegion,
    y: &DVector<T>,
    mut t: DVector<T>,
    clamp: bool,
) -> Option<(DVector<T>, usize)> {
    let far = 1e6 * (1.0 + y.norm() + t.norm());
    for it in 0..200 {
        let r = psi.eval(&t) - y;
        let j = psi.jacobian(&t);
        let step = least_squares(&j, &r)?;
        let mut next = &t - &step;
        if clamp {
            next = clamp_to_box(&next, param_box);
        }
        let moved = (&next - &t).norm();
        t = next;
        if !t.iter().all(|c| c.modulus().is_finite()) || t.norm() > far {
            return None;
        }
        if moved <= 1e-13 * (1.0 + t.norm()) {
            return Some((t, it));
        }
    }
    None
}

/// A finite collection of strata in a common ambient space.
#[derive(Debug, Clone)]
pub struct Stratification<T: Scalar = f64> {
    pub name: String,
    pub ambient_dim: usize,
    pub strata: Vec<Stratum<T>>,
    pub declared_a_regular: Option<bool>,
    pub union_closed: bool,
}

impl<T: Scalar> Stratification<T> {
    pub fn new(name: impl Into<String>, ambient_dim: usize, strata: Vec<Stratum<T>>) -> Result<Self> {
        for s in &strata {
            if s.ambient_dim != ambient_dim {
                return Err(Error::DimensionMismatch(format!(
                    "stratum `{}` lives in dimension {}, stratification in {ambient_dim}",
                    s.name, s.ambient_dim
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            ambient_dim,
            strata,
            declared_a_regular: None,
            union_closed: true,
        })
    }

    /// `r`, the smallest stratum dimension (`None` when there are no strata).
    pub fn min_dim(&self) -> Option<usize> {
        self.strata.iter().map(|s| s.dim).min()
    }

    pub fn stratum(&self, name: &str) -> Option<&Stratum<T>> {
        self.strata.iter().find(|s| s.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisjointnessViolation {
    pub point: Vec<f64>,
    pub strata: (String, String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityViolation {
    pub point: Vec<f64>,
    pub stratum: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub name: String,
    pub disjointness_violations: Vec<DisjointnessViolation>,
    pub regularity_violations: Vec<RegularityViolation>,
    /// Sampled frontier points of a stratum found in no stratum.
    pub closure_misses: Vec<Vec<f64>>,
    pub points_checked: usize,
    pub r: Option<usize>,
    pub valid: bool,
}

/// Sampling check of disjointness, regularity and (when declared) union closure
/// inside `window`.
pub fn validate<T: Scalar>(
    sigma: &Stratification<T>,
    window: &BoxRegion,
    per_axis: usize,
    tol: f64,
) -> ValidationReport {
    let mut disjoint = Vec::new();
    let mut regular = Vec::new();
    let mut misses = Vec::new();
    let mut checked = 0;
    for (i, s) in sigma.strata.iter().enumerate() {
        for y in s.sample_points(window, per_axis) {
            checked += 1;
            if let Err(e) = s.tangent_at(&y, tol) {
                if matches!(e, Error::SingularPoint { .. }) {
                    regular.push(RegularityViolation {
                        point: real_coords(&y),
                        stratum: s.name.clone(),
                        detail: e.to_string(),
                    });
                }
            }
            for (j, other) in sigma.strata.iter().enumerate() {
                if j != i && other.on_stratum(&y, tol).unwrap_or(false) {
                    let pair = if i < j {
                        (s.name.clone(), other.name.clone())
                    } else {
                        (other.name.clone(), s.name.clone())
                    };
                    let point = real_coords(&y);
                    if !disjoint
                        .iter()
                        .any(|v: &DisjointnessViolation| v.strata == pair && v.point == point)
                    {
                        disjoint.push(DisjointnessViolation { point, strata: pair });
                    }
                }
            }
        }
        if sigma.union_closed {
            for y in s.frontier_points(window, per_axis) {
                let found = sigma
                    .strata
                    .iter()
                    .any(|o| o.on_stratum(&y, tol.max(1e-9)).unwrap_or(false));
                if !found {
                    misses.push(real_coords(&y));
                }
            }
        }
    }
    let valid = disjoint.is_empty() && regular.is_empty() && misses.is_empty();
    ValidationReport {
        name: sigma.name.clone(),
        disjointness_violations: disjoint,
        regularity_violations: regular,
        closure_misses: misses,
        points_checked: checked,
        r: sigma.min_dim(),
        valid,
    }
}

/// Ready-made strata used by fixtures, tests and the CLI.
pub mod library {
    use super::*;
    use crate::geometry::FnMap;

    /// Unit circle `x^2 + y^2 - 1 = 0`.
    pub fn circle() -> Stratum {
        let g = PolynomialMap::from_terms(2, &[&[(&[2, 0], 1.0), (&[0, 2], 1.0), (&[0, 0], -1.0)]]);
        Stratum::implicit("circle", Arc::new(g), Vec::new())
    }

    /// Coordinate `axis` of `R^n` as a scalar map.
    pub fn coordinate(n: usize, axis: usize) -> PolynomialMap {
        let mut e = vec![0u32; n];
        e[axis] = 1;
        PolynomialMap::new(n, vec![vec![crate::geometry::Monomial { exponents: e, coeff: 1.0 }]])
            .expect("valid")
    }

    /// `R+ x 0`: `y = 0`, `x > 0`.
    pub fn positive_x_axis() -> Stratum {
        Stratum::implicit(
            "R+x0",
            Arc::new(coordinate(2, 1)),
            vec![RegionConstraint::new(coordinate(2, 0), Relation::Gt)],
        )
    }

    /// `R- x 0`: `y = 0`, `x < 0`.
    pub fn negative_x_axis() -> Stratum {
        Stratum::implicit(
            "R-x0",
            Arc::new(coordinate(2, 1)),
            vec![RegionConstraint::new(coordinate(2, 0), Relation::Lt)],
        )
    }

    /// `0 x R`: `x = 0`.
    pub fn y_axis() -> Stratum {
        Stratum::implicit("0xR", Arc::new(coordinate(2, 0)), Vec::new())
    }

    /// `R x 0`: `y = 0`.
    pub fn x_axis() -> Stratum {
        Stratum::implicit("Rx0", Arc::new(coordinate(2, 1)), Vec::new())
    }

    /// The origin of `R^2`.
    pub fn origin() -> Stratum {
        let g = PolynomialMap::affine(&DMatrix::identity(2, 2), &DVector::zeros(2));
        Stratum::implicit("origin", Arc::new(g), Vec::new())
    }

    /// Open upper half-plane `y > 0`.
    pub fn upper_half_plane() -> Stratum {
        Stratum::open(
            "upper",
            2,
            vec![RegionConstraint::new(coordinate(2, 1), Relation::Gt)],
        )
    }

    fn osc(x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else {
            x * x * (1.0 / x).sin()
        }
    }

    fn osc_prime(x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else {
            2.0 * x * (1.0 / x).sin() - (1.0 / x).cos()
        }
    }

    /// `{(t, t^2 sin(1/t)) : t > 0}` with its zeros (which lie on the x-axis) removed.
    pub fn oscillating_curve() -> Stratum {
        let g = FnMap::new(
            2,
            1,
            "y - x^2 sin(1/x)",
            |p: &DVector<f64>| DVector::from_element(1, p[1] - osc(p[0])),
            |p: &DVector<f64>| DMatrix::from_row_slice(1, 2, &[-osc_prime(p[0]), 1.0]),
        );
        Stratum::implicit(
            "osc",
            Arc::new(g),
            vec![
                RegionConstraint::new(coordinate(2, 0), Relation::Gt),
                RegionConstraint::new(coordinate(2, 1), Relation::Ne),
            ],
        )
    }

    /// `t -> (t, t^2 sin(1/t))`.
    pub fn oscillating_curve_param() -> FnMap {
        FnMap::new(
            1,
            2,
            "t -> (t, t^2 sin(1/t))",
            |t: &DVector<f64>| DVector::from_vec(vec![t[0], osc(t[0])]),
            |t: &DVector<f64>| DMatrix::from_row_slice(2, 1, &[1.0, osc_prime(t[0])]),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::library::*;
    use super::*;
    use crate::geometry::FnMap;
    use crate::subspace::subspace_distance;

    fn p(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn on_stratum_examples() {
        assert!(circle().on_stratum(&p(&[0.0, 1.0]), 1e-9).unwrap());
        assert!(!positive_x_axis().on_stratum(&p(&[0.0, 0.0]), 1e-9).unwrap());
        assert!(!circle().on_stratum(&p(&[0.0, 1.0 + 1e-3]), 1e-6).unwrap());
    }

    #[test]
    fn tangent_examples() {
        let t = circle().tangent_at(&p(&[0.0, 1.0]), 1e-9).unwrap();
        assert!(subspace_distance(&t, &Subspace::coordinate(2, &[0])).unwrap() < 1e-12);
        let t = y_axis().tangent_at(&p(&[0.0, 0.0]), 1e-9).unwrap();
        assert!(subspace_distance(&t, &Subspace::coordinate(2, &[1])).unwrap() < 1e-12);
        let t = positive_x_axis().tangent_at(&p(&[0.5, 0.0]), 1e-9).unwrap();
        assert!(subspace_distance(&t, &Subspace::coordinate(2, &[0])).unwrap() < 1e-12);
        assert!(matches!(
            positive_x_axis().tangent_at(&p(&[-0.5, 0.0]), 1e-9),
            Err(Error::NotOnStratum(_))
        ));
    }

    #[test]
    fn singular_point_is_reported() {
        // x^2 - y^2 = 0 at the origin: gradient vanishes
        let g = PolynomialMap::from_terms(2, &[&[(&[2, 0], 1.0), (&[0, 2], -1.0)]]);
        let s = Stratum::implicit("cone", Arc::new(g), Vec::new());
        assert!(matches!(
            s.tangent_at(&p(&[0.0, 0.0]), 1e-9),
            Err(Error::SingularPoint { .. })
        ));
    }

    #[test]
    fn parametric_circle_matches_implicit() {
        let psi = FnMap::new(
            1,
            2,
            "t -> (cos t, sin t)",
            |t: &DVector<f64>| p(&[t[0].cos(), t[0].sin()]),
            |t: &DVector<f64>| DMatrix::from_row_slice(2, 1, &[-t[0].sin(), t[0].cos()]),
        );
        let s = Stratum::parametric("circle-param", Arc::new(psi), BoxRegion::interval(-3.0, 3.0));
        for &a in &[0.3, 1.0, 2.0, -2.5] {
            let y = p(&[f64::cos(a), f64::sin(a)]);
            assert!(s.on_stratum(&y, 1e-9).unwrap());
            let t1 = s.tangent_at(&y, 1e-9).unwrap();
            let t2 = circle().tangent_at(&y, 1e-9).unwrap();
            assert!(subspace_distance(&t1, &t2).unwrap() < 1e-6);
        }
        assert!(!s.on_stratum(&p(&[0.0, 1.1]), 1e-9).unwrap());
        // the point (-1, 0) needs parameter pi, outside the open box
        assert!(!s.on_stratum(&p(&[-1.0, 0.0]), 1e-9).unwrap());
    }

    #[test]
    fn clearance_values() {
        let d = circle().clearance(&p(&[0.5, 1.25])).unwrap();
        assert!((d - ((0.25f64 + 1.5625).sqrt() - 1.0)).abs() < 1e-12);
        let d = positive_x_axis().clearance(&p(&[-1.0, 1.0])).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(positive_x_axis().clearance(&p(&[2.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn validate_examples() {
        let window = BoxRegion::cube(2, 2.0);
        let gol = Stratification::new("golubitsky", 2, vec![positive_x_axis(), y_axis()]).unwrap();
        let rep = validate(&gol, &window, 9, 1e-9);
        assert!(rep.valid, "{rep:?}");
        assert_eq!(rep.r, Some(1));

        let circ = Stratification::new("circle", 2, vec![circle()]).unwrap();
        let rep = validate(&circ, &window, 9, 1e-9);
        assert!(rep.valid, "{rep:?}");
        assert_eq!(rep.r, Some(1));

        let mut dup = x_axis();
        dup.name = "Rx0-copy".into();
        let twice = Stratification::new("twice", 2, vec![x_axis(), dup]).unwrap();
        let rep = validate(&twice, &window, 9, 1e-9);
        assert!(!rep.valid);
        assert!(!rep.disjointness_violations.is_empty());

        let open_only = Stratification::new("ray", 2, vec![positive_x_axis()]).unwrap();
        let rep = validate(&open_only, &window, 9, 1e-9);
        assert!(!rep.closure_misses.is_empty());
    }
}
