//! Linear subspaces of `F^n` (F real or complex) with orthonormal bases.
//!
//! Every rank, containment and limit question elsewhere in the crate is
//! answered here. Bases are stored column-orthonormal; two values with the
//! same span compare equal through [`subspace_distance`], not through their
//! bases.

use nalgebra::{DMatrix, DVector};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
pub use crate::linalg::singular_values;
use crate::linalg::svd;
use crate::scalar::{Field, Scalar};
use crate::tolerances::{TOL_GRASS, TOL_ORTHO, TOL_RANK};

/// Ratio between a singular value and the rank threshold below which a
/// decision is reported inconclusive.
pub const RANK_GAP_RATIO: f64 = 1e3;

/// Operator 2-norm.
pub fn spectral_norm<T: Scalar>(a: &DMatrix<T>) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Concatenates two matrices with the same row count.
pub fn hcat<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    assert_eq!(a.nrows(), b.nrows());
    let ka = a.ncols();
    DMatrix::from_fn(a.nrows(), ka + b.ncols(), |r, c| {
        if c < ka {
            a[(r, c)]
        } else {
            b[(r, c - ka)]
        }
    })
}

/// Outcome of a numerical rank computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankDecision {
    pub numeric_rank: usize,
    pub smallest_kept_singular_value: f64,
    pub largest_dropped_singular_value: f64,
    pub threshold: f64,
    pub conclusive: bool,
}

/// Counts singular values strictly above `tol_rel * sigma_max`.
///
/// The decision is inconclusive when some singular value lies within a factor
/// [`RANK_GAP_RATIO`] of the threshold.
pub fn numeric_rank<T: Scalar>(a: &DMatrix<T>, tol_rel: f64) -> RankDecision {
    decide_rank(&singular_values(a), tol_rel, 0.0)
}

/// As [`numeric_rank`], with the threshold `tol_rel * max(sigma_max, floor)`.
pub fn numeric_rank_floored<T: Scalar>(a: &DMatrix<T>, tol_rel: f64, floor: f64) -> RankDecision {
    decide_rank(&singular_values(a), tol_rel, floor)
}

pub(crate) fn decide_rank(sigma: &[f64], tol_rel: f64, floor: f64) -> RankDecision {
    let smax = sigma.first().copied().unwrap_or(0.0);
    let threshold = tol_rel * smax.max(floor);
    let rank = sigma.iter().filter(|&&s| s > threshold).count();
    let kept = if rank > 0 { sigma[rank - 1] } else { 0.0 };
    let dropped = sigma.get(rank).copied().unwrap_or(0.0);
    let conclusive = threshold == 0.0
        || sigma
            .iter()
            .all(|&s| s <= threshold / RANK_GAP_RATIO || s > threshold * RANK_GAP_RATIO);
    RankDecision {
        numeric_rank: rank,
        smallest_kept_singular_value: kept,
        largest_dropped_singular_value: dropped,
        threshold,
        conclusive,
    }
}

/// A linear subspace of `F^n` stored through an `n x k` orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace<T: Scalar = f64> {
    basis: DMatrix<T>,
}

impl<T: Scalar> Subspace<T> {
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            basis: DMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            basis: DMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    /// Span of the standard basis vectors with the given indices.
    ///
    /// Axes must be distinct; the basis is stored exactly, in the given order.
    pub fn coordinate(ambient_dim: usize, axes: &[usize]) -> Self {
        let mut basis = DMatrix::zeros(ambient_dim, axes.len());
        for (c, &i) in axes.iter().enumerate() {
            basis[(i, c)] = T::one();
        }
        Self { basis }
    }

    /// Span of a list of vectors (any of which may be dependent).
    pub fn span(ambient_dim: usize, vectors: &[DVector<T>]) -> Self {
        let m = DMatrix::from_fn(ambient_dim, vectors.len(), |r, c| vectors[c][r]);
        Self::from_spanning(&m)
    }

    /// Column span of `a`, with rank decided at the default relative tolerance.
    pub fn from_spanning(a: &DMatrix<T>) -> Self {
        Self::from_spanning_tol(a, TOL_RANK)
    }

    pub fn from_spanning_tol(a: &DMatrix<T>, tol_rel: f64) -> Self {
        let n = a.nrows();
        if a.ncols() == 0 || n == 0 {
            return Self::zero(n);
        }
        let s = svd(a);
        let rank = decide_rank(&s.sigma, tol_rel, 0.0).numeric_rank;
        Self {
            basis: s.u.columns(0, rank).into_owned(),
        }
    }

    /// Wraps a basis that is already orthonormal, checking it within `tol_ortho`.
    pub fn from_orthonormal(basis: DMatrix<T>, tol_ortho: f64) -> Result<Self> {
        let s = Self { basis };
        let defect = s.orthonormality_defect();
        if defect > tol_ortho {
            return Err(Error::InvalidOperands(format!(
                "basis is not orthonormal (defect {defect:.3e})"
            )));
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn field(&self) -> Field {
        T::FIELD
    }

    pub fn basis(&self) -> &DMatrix<T> {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<DVector<T>> {
        self.basis.column_iter().map(|c| c.into_owned()).collect()
    }

    /// `max |B^H B - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.basis.adjoint() * &self.basis - DMatrix::<T>::identity(self.dim(), self.dim());
        g.iter().map(|x| x.modulus()).fold(0.0, f64::max)
    }

    pub fn projector(&self) -> DMatrix<T> {
        &self.basis * self.basis.adjoint()
    }

    /// `(I - P) a`, the part of `a` orthogonal to this subspace.
    pub fn residual_of(&self, a: &DMatrix<T>) -> DMatrix<T> {
        a - &self.basis * (self.basis.adjoint() * a)
    }

    pub fn residual_of_vector(&self, v: &DVector<T>) -> DVector<T> {
        v - &self.basis * (self.basis.adjoint() * v)
    }

    pub fn contains_vector(&self, v: &DVector<T>, tol: f64) -> bool {
        self.residual_of_vector(v).norm() <= tol * v.norm().max(1.0)
    }

    pub fn orthogonal_complement(&self) -> Self {
        let n = self.ambient_dim();
        let k = n - self.dim();
        if k == 0 {
            return Self::zero(n);
        }
        let p_perp = DMatrix::<T>::identity(n, n) - self.projector();
        let s = svd(&p_perp);
        Self {
            basis: s.u.columns(0, k).into_owned(),
        }
    }

    /// Re-orthonormalises the basis after permuting its columns.
    pub fn rebased(&self, order: &[usize]) -> Self {
        let cols: Vec<DVector<T>> = order
            .iter()
            .map(|&i| self.basis.column(i).into_owned())
            .collect();
        Self::span(self.ambient_dim(), &cols)
    }
}

fn check_operands<T: Scalar>(a: &Subspace<T>, b: &Subspace<T>) -> Result<()> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(Error::InvalidOperands(format!(
            "ambient dimensions differ: {} vs {}",
            a.ambient_dim(),
            b.ambient_dim()
        )));
    }
    Ok(())
}

/// `a + b`.
pub fn sum<T: Scalar>(a: &Subspace<T>, b: &Subspace<T>) -> Result<Subspace<T>> {
    check_operands(a, b)?;
    Ok(Subspace::from_spanning(&hcat(&a.basis, &b.basis)))
}

/// `a ∩ b`, computed as `(a⊥ + b⊥)⊥`.
pub fn intersect<T: Scalar>(a: &Subspace<T>, b: &Subspace<T>) -> Result<Subspace<T>> {
    check_operands(a, b)?;
    let perp = sum(&a.orthogonal_complement(), &b.orthogonal_complement())?;
    Ok(perp.orthogonal_complement())
}

/// Sine of the largest principal angle between equal-dimensional subspaces.
pub fn subspace_distance<T: Scalar>(a: &Subspace<T>, b: &Subspace<T>) -> Result<f64> {
    check_operands(a, b)?;
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "distance needs equal dimensions, got {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    if a.dim() == 0 {
        return Ok(0.0);
    }
    Ok(spectral_norm(&a.residual_of(&b.basis)).min(1.0))
}

/// `||(I - P_outer) B_inner||_2`.
pub fn containment_residual<T: Scalar>(outer: &Subspace<T>, inner: &Subspace<T>) -> Result<f64> {
    check_operands(outer, inner)?;
    Ok(spectral_norm(&outer.residual_of(&inner.basis)))
}

pub fn contains<T: Scalar>(outer: &Subspace<T>, inner: &Subspace<T>, tol: f64) -> Result<bool> {
    Ok(containment_residual(outer, inner)? <= tol)
}

/// Orthogonal complement of `inner` inside `outer`.
pub fn complement_within<T: Scalar>(inner: &Subspace<T>, outer: &Subspace<T>) -> Result<Subspace<T>> {
    let residual = containment_residual(outer, inner)?;
    if residual > TOL_GRASS {
        return Err(Error::NotContained { residual });
    }
    let k = outer.dim() - inner.dim();
    if k == 0 {
        return Ok(Subspace::zero(outer.ambient_dim()));
    }
    let s = svd(&inner.residual_of(&outer.basis));
    Ok(Subspace {
        basis: s.u.columns(0, k).into_owned(),
    })
}

/// Completes the basis of `partial` to an orthonormal basis of the ambient space.
///
/// The first `k` columns are `partial`'s basis unchanged. Completion vectors
/// come from pivoted Gram-Schmidt on the standard basis (largest residual
/// first, lowest index on ties), are phase-normalised so their first nonzero
/// coordinate is positive real, and are stably sorted by that coordinate's
/// magnitude, descending.
pub fn extend_to_basis<T: Scalar>(partial: &Subspace<T>) -> DMatrix<T> {
    let n = partial.ambient_dim();
    let mut q: Vec<DVector<T>> = partial.basis_vectors();
    let project_out = |v: &mut DVector<T>, q: &[DVector<T>]| {
        for _ in 0..2 {
            for b in q {
                let c = b.dotc(v);
                *v -= b * c;
            }
        }
    };
    let mut completion: Vec<DVector<T>> = Vec::new();
    while q.len() < n {
        let mut best: Option<(usize, DVector<T>, f64)> = None;
        for i in 0..n {
            let mut e = DVector::<T>::zeros(n);
            e[i] = T::one();
            project_out(&mut e, &q);
            let norm = e.norm();
            if best.as_ref().is_none_or(|(_, _, b)| norm > *b + 1e-12) {
                best = Some((i, e, norm));
            }
        }
        let (_, v, norm) = best.expect("n > 0");
        let v = v.unscale(norm);
        q.push(v.clone());
        completion.push(v);
    }
    let lead = |v: &DVector<T>| -> (f64, T) {
        v.iter()
            .find(|c| c.modulus() > 1e-12)
            .map(|c| (c.modulus(), *c))
            .unwrap_or((0.0, T::one()))
    };
    let mut keyed: Vec<(f64, DVector<T>)> = completion
        .into_iter()
        .map(|v| {
            let (m, c) = lead(&v);
            let phase = c.conjugate().unscale(m);
            (m, v * phase)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut cols = partial.basis_vectors();
    cols.extend(keyed.into_iter().map(|(_, v)| v));
    DMatrix::from_fn(n, n, |r, c| cols[c][r])
}

#[derive(Serialize, Deserialize)]
struct SubspaceJson {
    field: Field,
    ambient_dim: usize,
    /// Row-major `n x k` entries, each `[re]` or `[re, im]`.
    basis: Vec<Vec<f64>>,
}

impl<T: Scalar> Serialize for Subspace<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let (n, k) = self.basis.shape();
        let mut basis = Vec::with_capacity(n * k);
        for r in 0..n {
            for c in 0..k {
                basis.push(self.basis[(r, c)].components());
            }
        }
        SubspaceJson {
            field: T::FIELD,
            ambient_dim: n,
            basis,
        }
        .serialize(serializer)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Subspace<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = SubspaceJson::deserialize(deserializer)?;
        if raw.field != T::FIELD {
            return Err(de::Error::custom(format!(
                "expected a {} subspace, found field `{}`",
                T::FIELD,
                raw.field
            )));
        }
        let n = raw.ambient_dim;
        if n == 0 || raw.basis.len() % n != 0 {
            return Err(de::Error::custom(format!(
                "basis has {} entries, not a multiple of ambient_dim {n}",
                raw.basis.len()
            )));
        }
        let k = raw.basis.len() / n;
        let mut entries = Vec::with_capacity(n * k);
        for e in &raw.basis {
            entries.push(parse_entry::<T>(e).map_err(de::Error::custom)?);
        }
        let m = DMatrix::from_fn(n, k, |r, c| entries[r * k + c]);
        Ok(Subspace::from_spanning(&m))
    }
}

/// Parses `[re]`, `[re, im]` (complex) or `[re, 0]` (real).
pub(crate) fn parse_entry<T: Scalar>(e: &[f64]) -> std::result::Result<T, String> {
    match (T::FIELD, e.len()) {
        (_, 1) => Ok(T::from_components(&[e[0], 0.0])),
        (Field::Complex, 2) => Ok(T::from_components(e)),
        (Field::Real, 2) if e[1] == 0.0 => Ok(T::from_components(e)),
        _ => Err(format!("invalid {} entry {e:?}", T::FIELD)),
    }
}

/// Default tolerance check used by callers that hold a basis from elsewhere.
pub fn is_orthonormal<T: Scalar>(b: &DMatrix<T>) -> bool {
    Subspace { basis: b.clone() }.orthonormality_defect() <= TOL_ORTHO
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn sum_examples() {
        let e1 = Subspace::<f64>::coordinate(2, &[0]);
        let e2 = Subspace::<f64>::coordinate(2, &[1]);
        assert_eq!(sum(&e1, &e2).unwrap().dim(), 2);
        let s = sum(&e1, &e1).unwrap();
        assert_eq!(s.dim(), 1);
        assert!(subspace_distance(&s, &e1).unwrap() < TOL_GRASS);
        let a = Subspace::<f64>::coordinate(3, &[0, 1]);
        let b = Subspace::<f64>::coordinate(3, &[1, 2]);
        assert_eq!(sum(&a, &b).unwrap().dim(), 3);
    }

    #[test]
    fn intersect_examples() {
        let a = Subspace::<f64>::coordinate(3, &[0, 1]);
        let b = Subspace::<f64>::coordinate(3, &[1, 2]);
        let i = intersect(&a, &b).unwrap();
        assert_eq!(i.dim(), 1);
        assert!(subspace_distance(&i, &Subspace::coordinate(3, &[1])).unwrap() < TOL_GRASS);
        let ii = intersect(&a, &a).unwrap();
        assert!(subspace_distance(&ii, &a).unwrap() < TOL_GRASS);
    }

    #[test]
    fn distance_examples() {
        let e1 = Subspace::<f64>::coordinate(2, &[0]);
        let e2 = Subspace::<f64>::coordinate(2, &[1]);
        let diag = Subspace::span(2, &[v(&[1.0, 1.0])]);
        assert_eq!(subspace_distance(&e1, &e1).unwrap(), 0.0);
        assert_abs_diff_eq!(subspace_distance(&e1, &e2).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            subspace_distance(&e1, &diag).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-6
        );
        let plane = Subspace::<f64>::full(2);
        assert!(matches!(
            subspace_distance(&e1, &plane),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn operand_mismatch_is_rejected() {
        let a = Subspace::<f64>::full(2);
        let b = Subspace::<f64>::full(3);
        assert!(matches!(sum(&a, &b), Err(Error::InvalidOperands(_))));
        assert!(matches!(intersect(&a, &b), Err(Error::InvalidOperands(_))));
    }

    #[test]
    fn contains_examples() {
        let e1 = Subspace::<f64>::coordinate(2, &[0]);
        let e2 = Subspace::<f64>::coordinate(2, &[1]);
        assert!(contains(&Subspace::full(2), &e1, 1e-9).unwrap());
        assert!(!contains(&e1, &e2, 1e-9).unwrap());
        let anti = Subspace::span(2, &[v(&[1.0, -1.0])]);
        let r = containment_residual(&anti, &e1).unwrap();
        assert_abs_diff_eq!(r, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert!(!contains(&anti, &e1, 1e-6).unwrap());
    }

    #[test]
    fn complement_examples() {
        let e1 = Subspace::<f64>::coordinate(2, &[0]);
        let c = complement_within(&e1, &Subspace::full(2)).unwrap();
        assert!(subspace_distance(&c, &Subspace::coordinate(2, &[1])).unwrap() < TOL_GRASS);
        let x = Subspace::<f64>::coordinate(3, &[0, 2]);
        assert_eq!(complement_within(&x, &x).unwrap().dim(), 0);
        let outer = Subspace::<f64>::coordinate(4, &[0, 1, 2]);
        let inner = Subspace::<f64>::coordinate(4, &[1]);
        let c = complement_within(&inner, &outer).unwrap();
        assert!(subspace_distance(&c, &Subspace::coordinate(4, &[0, 2])).unwrap() < TOL_GRASS);
        assert!(matches!(
            complement_within(&Subspace::coordinate(4, &[3]), &outer),
            Err(Error::NotContained { .. })
        ));
    }

    #[test]
    fn extend_examples() {
        let b = extend_to_basis(&Subspace::<f64>::coordinate(2, &[0]));
        assert_eq!(b, DMatrix::identity(2, 2));
        let b = extend_to_basis(&Subspace::<f64>::zero(3));
        assert_eq!(b, DMatrix::identity(3, 3));
        let p = Subspace::span(3, &[v(&[1.0, 1.0, 0.0])]);
        let b = extend_to_basis(&p);
        assert!(is_orthonormal(&b));
        let first = b.column(0).into_owned();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((first.clone() - v(&[s, s, 0.0])).norm() < 1e-12 || (first + v(&[s, s, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn rank_examples() {
        let r = numeric_rank(&DMatrix::<f64>::identity(3, 3), TOL_RANK);
        assert_eq!((r.numeric_rank, r.conclusive), (3, true));
        let r = numeric_rank(&DMatrix::<f64>::zeros(3, 3), TOL_RANK);
        assert_eq!((r.numeric_rank, r.conclusive), (0, true));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-14]);
        let r = numeric_rank(&m, 1e-9);
        assert_eq!((r.numeric_rank, r.conclusive), (1, true));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-8]);
        assert!(!numeric_rank(&m, 1e-9).conclusive);
    }

    #[test]
    fn complex_subspaces() {
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let a = Subspace::span(2, &[DVector::from_vec(vec![one, i])]);
        let b = Subspace::span(2, &[DVector::from_vec(vec![i, -one])]);
        // (i, -1) = i * (1, i)
        assert!(subspace_distance(&a, &b).unwrap() < 1e-12);
        let c = Subspace::span(2, &[DVector::from_vec(vec![one, -i])]);
        assert_abs_diff_eq!(subspace_distance(&a, &c).unwrap(), 1.0, epsilon = 1e-12);
        let full = extend_to_basis(&a);
        assert!(is_orthonormal(&full));
    }

    #[test]
    fn json_roundtrip_reorthonormalises() {
        let json = r#"{"field":"real","ambient_dim":2,"basis":[[2.0],[2.0]]}"#;
        let s: Subspace<f64> = serde_json::from_str(json).unwrap();
        assert_eq!(s.dim(), 1);
        assert!(s.orthonormality_defect() < TOL_ORTHO);
        let back: Subspace<f64> = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert!(subspace_distance(&s, &back).unwrap() < TOL_GRASS);
        let wrong = r#"{"field":"complex","ambient_dim":2,"basis":[[1.0,0.0],[0.0,0.0]]}"#;
        assert!(serde_json::from_str::<Subspace<f64>>(wrong).is_err());
        let c: Subspace<Complex64> = serde_json::from_str(wrong).unwrap();
        assert_eq!(c.dim(), 1);
    }
}
