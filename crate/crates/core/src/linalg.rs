//! Dense SVD for the small matrices used throughout the crate.
//!
//! One-sided (Hestenes) Jacobi: columns are rotated pairwise until mutually
//! orthogonal, so tiny singular values keep high relative accuracy and the
//! left singular vectors of nonzero singular values come out orthonormal even
//! for rank-deficient inputs.

use nalgebra::{DMatrix, DVector};

use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 80;

/// `a = u * diag(sigma) * v^H` with `sigma` descending; `u` is `m x p`, `v` is
/// `n x p`, `p = min(m, n)`.
#[derive(Debug, Clone)]
pub struct Svd<T: Scalar> {
    pub u: DMatrix<T>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<T>,
}

pub fn svd<T: Scalar>(a: &DMatrix<T>) -> Svd<T> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        let p = m.min(n);
        return Svd {
            u: DMatrix::zeros(m, p),
            sigma: Vec::new(),
            v: DMatrix::zeros(n, p),
        };
    }
    if m < n {
        let t = jacobi(&a.adjoint());
        return Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        };
    }
    jacobi(a)
}

fn jacobi<T: Scalar>(a: &DMatrix<T>) -> Svd<T> {
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = DMatrix::<T>::identity(n, n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let alpha = w.column(i).norm_squared();
                let beta = w.column(j).norm_squared();
                let gamma = w.column(i).dotc(&w.column(j));
                let g = gamma.modulus();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // rotate column j by a unit phase so that <w_i, w_j> becomes real positive
                let phase = gamma.unscale(g).conjugate();
                for r in 0..m {
                    w[(r, j)] *= phase;
                }
                for r in 0..n {
                    v[(r, j)] *= phase;
                }
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|k| w.column(k).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap_or(std::cmp::Ordering::Equal));
    let sigma: Vec<f64> = order.iter().map(|&k| norms[k]).collect();
    let mut u_cols: Vec<DVector<T>> = Vec::with_capacity(n);
    for &k in &order {
        if norms[k] > 0.0 {
            u_cols.push(w.column(k).unscale(norms[k]));
        }
    }
    // zero singular values: complete with standard basis vectors
    while u_cols.len() < n {
        let mut best: Option<(f64, DVector<T>)> = None;
        for e in 0..m {
            let mut x = DVector::<T>::zeros(m);
            x[e] = T::one();
            for _ in 0..2 {
                for q in &u_cols {
                    let c = q.dotc(&x);
                    x -= q * c;
                }
            }
            let nx = x.norm();
            if best.as_ref().is_none_or(|(b, _)| nx > *b + 1e-12) {
                best = Some((nx, x));
            }
        }
        let (nx, x) = best.expect("m > 0");
        u_cols.push(x.unscale(nx));
    }
    let u = DMatrix::from_fn(m, n, |r, c| u_cols[c][r]);
    let v = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Svd { u, sigma, v }
}

fn rotate<T: Scalar>(x: &mut DMatrix<T>, i: usize, j: usize, c: f64, s: f64) {
    for r in 0..x.nrows() {
        let xi = x[(r, i)];
        let xj = x[(r, j)];
        x[(r, i)] = xi.scale(c) - xj.scale(s);
        x[(r, j)] = xi.scale(s) + xj.scale(c);
    }
}

/// Singular values, descending.
pub fn singular_values<T: Scalar>(a: &DMatrix<T>) -> Vec<f64> {
    svd(a).sigma
}

/// Minimum-norm least-squares solution of `a x = b`, dropping singular values
/// below `rcond * sigma_max`.
pub fn least_squares<T: Scalar>(a: &DMatrix<T>, b: &DVector<T>, rcond: f64) -> DVector<T> {
    if a.nrows() == 1 {
        // one singular value |a|, never below its own cutoff
        let nrm2 = a.norm_squared();
        if nrm2 == 0.0 {
            return DVector::zeros(a.ncols());
        }
        return a.row(0).adjoint() * b[0].unscale(nrm2);
    }
    let s = svd(a);
    let cutoff = rcond * s.sigma.first().copied().unwrap_or(0.0);
    let mut x = DVector::<T>::zeros(a.ncols());
    for (k, &sk) in s.sigma.iter().enumerate() {
        if sk > cutoff && sk > 0.0 {
            let coef = s.u.column(k).dotc(b).unscale(sk);
            x += s.v.column(k) * coef;
        }
    }
    x
}
