//! Exact linear algebra over the rationals (or Gaussian rationals).
//!
//! Floating-point results elsewhere are checked against these routines, never
//! the other way round. Everything here is plain fraction-arithmetic Gaussian
//! elimination; no SVD is involved.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use num_traits::{Num, Zero};
use serde::{Deserialize, Serialize};

use crate::geometry::{DifferentiableMap, PolynomialMap};
use crate::scalar::Scalar;
use crate::strata::{Relation, Representation, Stratum};

pub type Matrix<F> = Vec<Vec<F>>;

/// Reduced row echelon form; returns the pivot columns.
pub fn rref<F: Clone + Num>(rows: &mut Matrix<F>) -> Vec<usize> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        let Some(p) = (r..nrows).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = F::one() / rows[r][c].clone();
        for x in rows[r].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        for i in 0..nrows {
            if i != r && !rows[i][c].is_zero() {
                let factor = rows[i][c].clone();
                for j in 0..ncols {
                    let sub = factor.clone() * rows[r][j].clone();
                    rows[i][j] = rows[i][j].clone() - sub;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank<F: Clone + Num>(rows: &Matrix<F>) -> usize {
    let mut m = rows.clone();
    rref(&mut m).len()
}

/// Basis of `{ x : A x = 0 }` for an `r x ncols` matrix.
pub fn nullspace<F: Clone + Num>(rows: &Matrix<F>, ncols: usize) -> Matrix<F> {
    let mut m = rows.clone();
    let pivots = rref(&mut m);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![F::zero(); ncols];
            x[f] = F::one();
            for (i, &p) in pivots.iter().enumerate() {
                x[p] = F::zero() - m[i][f].clone();
            }
            x
        })
        .collect()
}

/// Exact copy of a floating-point matrix (every double is a dyadic rational).
pub fn from_matrix<T: Scalar>(m: &DMatrix<T>) -> Matrix<T::Exact> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)].to_exact()).collect())
        .collect()
}

pub fn hcat<F: Clone>(a: &Matrix<F>, b: &Matrix<F>) -> Matrix<F> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().chain(y).cloned().collect())
        .collect()
}

fn columns_as_rows<F: Clone>(cols: &Matrix<F>, n: usize) -> Matrix<F> {
    // `cols` is a list of column vectors of length n; returns the n x k matrix.
    (0..n).map(|r| cols.iter().map(|c| c[r].clone()).collect()).collect()
}

pub fn matrix_rank<T: Scalar>(m: &DMatrix<T>) -> usize {
    rank(&from_matrix(m))
}

/// `dim(span A + span B)`.
pub fn sum_dim<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> usize {
    rank(&hcat(&from_matrix(a), &from_matrix(b)))
}

/// `dim(span A ∩ span B)` from the nullspace of `[A | -B]`: each null vector
/// `(p, q)` contributes `A p` to the intersection.
pub fn intersection_dim<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> usize {
    let n = a.nrows();
    let ea = from_matrix(a);
    let neg_b: Matrix<T::Exact> = from_matrix(b)
        .into_iter()
        .map(|row| row.into_iter().map(|x| T::Exact::zero() - x).collect())
        .collect();
    let ka = a.ncols();
    let null = nullspace(&hcat(&ea, &neg_b), ka + b.ncols());
    let images: Matrix<T::Exact> = null
        .iter()
        .map(|x| {
            (0..n)
                .map(|r| {
                    (0..ka).fold(T::Exact::zero(), |acc, c| {
                        acc + ea[r][c].clone() * x[c].clone()
                    })
                })
                .collect()
        })
        .collect();
    if images.is_empty() {
        return 0;
    }
    rank(&columns_as_rows(&images, n))
}

/// `span inner ⊆ span outer`.
pub fn contains<T: Scalar>(outer: &DMatrix<T>, inner: &DMatrix<T>) -> bool {
    sum_dim(outer, inner) == matrix_rank(outer)
}

fn relation_holds<T: Scalar>(rel: Relation, v: &T::Exact) -> bool {
    let sign = T::exact_real_sign(v);
    match rel {
        Relation::Gt => sign == Ordering::Greater,
        Relation::Ge => sign != Ordering::Less,
        Relation::Lt => sign == Ordering::Less,
        Relation::Le => sign != Ordering::Greater,
        Relation::Ne => !T::exact_is_zero(v),
    }
}

/// Pointwise transversality decided in exact arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactVerdict {
    pub stratum: String,
    pub on_stratum: bool,
    pub transverse: bool,
    /// Rank of `[Df | T_y S]` (absent when the image misses the stratum).
    pub block_rank: Option<usize>,
    pub ambient_dim: usize,
}

/// Exact verdict for a polynomial map against an implicit stratum whose
/// constraint and region maps are polynomial, at a dyadic point. `None` when
/// the data is not polynomial or the constraint is singular at the image.
pub fn transverse_at<T: Scalar>(f: &PolynomialMap<T>, x: &[T::Exact], s: &Stratum<T>) -> Option<ExactVerdict> {
    let Representation::Implicit { constraint, region } = &s.repr else {
        return None;
    };
    let g = constraint.as_polynomial()?;
    let regions = region
        .iter()
        .map(|r| r.map.as_polynomial().map(|p| (p, r.relation)))
        .collect::<Option<Vec<_>>>()?;
    let n = s.ambient_dim;
    let y = f.eval_exact(x);
    let on = g.eval_exact(&y).iter().all(T::exact_is_zero)
        && regions.iter().all(|(p, rel)| relation_holds::<T>(*rel, &p.eval_exact(&y)[0]));
    if !on {
        return Some(ExactVerdict {
            stratum: s.name.clone(),
            on_stratum: false,
            transverse: true,
            block_rank: None,
            ambient_dim: n,
        });
    }
    let dg = g.jacobian_exact(&y);
    if rank(&dg) != g.target_dim() {
        return None;
    }
    // T_y S = ker Dg; stacked with the columns of Df
    let tangent = nullspace(&dg, n);
    let df = f.jacobian_exact(x);
    let block: Matrix<T::Exact> = (0..n)
        .map(|r| df[r].iter().cloned().chain(tangent.iter().map(|t| t[r].clone())).collect())
        .collect();
    let block_rank = rank(&block);
    Some(ExactVerdict {
        stratum: s.name.clone(),
        on_stratum: true,
        transverse: block_rank == n,
        block_rank: Some(block_rank),
        ambient_dim: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    #[test]
    fn rank_and_nullspace() {
        let m = vec![vec![q(1), q(2), q(3)], vec![q(2), q(4), q(6)]];
        assert_eq!(rank(&m), 1);
        let ns = nullspace(&m, 3);
        assert_eq!(ns.len(), 2);
        for x in ns {
            let dot = q(1) * x[0].clone() + q(2) * x[1].clone() + q(3) * x[2].clone();
            assert!(dot.is_zero());
        }
    }

    #[test]
    fn stacked_coordinate_planes() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        assert_eq!(sum_dim(&a, &b), 3);
        assert_eq!(intersection_dim(&a, &b), 1);
        assert!(!contains(&a, &b));
        assert!(contains(&a, &a));
    }

    #[test]
    fn parabola_against_axes() {
        use crate::strata::library::{positive_x_axis, y_axis};
        let f = PolynomialMap::from_terms(1, &[&[(&[1], 1.0)], &[(&[2], 1.0)]]);
        let v = transverse_at(&f, &[q(0)], &y_axis()).unwrap();
        assert!(v.on_stratum && v.transverse && v.block_rank == Some(2));
        assert!(!transverse_at(&f, &[q(0)], &positive_x_axis()).unwrap().on_stratum);
        // (x, (x - 1/2)^2) touches R+ x 0 at x = 1/2
        let g = PolynomialMap::from_terms(1, &[&[(&[1], 1.0)], &[(&[2], 1.0), (&[1], -1.0), (&[0], 0.25)]]);
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        let v = transverse_at(&g, &[half], &positive_x_axis()).unwrap();
        assert!(v.on_stratum && !v.transverse && v.block_rank == Some(1));
    }

    #[test]
    fn gaussian_rationals() {
        use num_complex::Complex64;
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let m = DMatrix::from_row_slice(2, 2, &[one, i, i, -one]);
        assert_eq!(matrix_rank(&m), 1);
    }
}
