//! The two coefficient fields, real and complex, behind one trait.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{Num, Zero};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Field::Real => f.write_str("real"),
            Field::Complex => f.write_str("complex"),
        }
    }
}

/// Scalars usable as subspace coefficients.
///
/// Inner products are conjugate-linear in the first argument (`adjoint() * b`).
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync + 'static {
    const FIELD: Field;
    /// Number of real coordinates per scalar (1 or 2).
    const COMPONENTS: usize;
    /// Exact counterpart used by the rational oracle.
    type Exact: Clone + Num + std::fmt::Debug + PartialEq + Send + Sync;

    fn from_components(c: &[f64]) -> Self;
    fn components(self) -> Vec<f64>;
    fn to_exact(self) -> Self::Exact;
    fn exact_from_integer(n: i64) -> Self::Exact;
    fn exact_is_zero(e: &Self::Exact) -> bool {
        e.is_zero()
    }
    /// Sign of the real part.
    fn exact_real_sign(e: &Self::Exact) -> std::cmp::Ordering;
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
}

impl Scalar for f64 {
    const FIELD: Field = Field::Real;
    const COMPONENTS: usize = 1;
    type Exact = BigRational;

    fn from_components(c: &[f64]) -> Self {
        c[0]
    }
    fn components(self) -> Vec<f64> {
        vec![self]
    }
    fn to_exact(self) -> BigRational {
        rational(self)
    }
    fn exact_from_integer(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }
    fn exact_real_sign(e: &BigRational) -> std::cmp::Ordering {
        e.cmp(&BigRational::zero())
    }
}

impl Scalar for Complex64 {
    const FIELD: Field = Field::Complex;
    const COMPONENTS: usize = 2;
    type Exact = Complex<BigRational>;

    fn from_components(c: &[f64]) -> Self {
        Complex64::new(c[0], c[1])
    }
    fn components(self) -> Vec<f64> {
        vec![self.re, self.im]
    }
    fn to_exact(self) -> Complex<BigRational> {
        Complex::new(rational(self.re), rational(self.im))
    }
    fn exact_from_integer(n: i64) -> Complex<BigRational> {
        Complex::new(BigRational::from_integer(BigInt::from(n)), BigRational::zero())
    }
    fn exact_real_sign(e: &Complex<BigRational>) -> std::cmp::Ordering {
        e.re.cmp(&BigRational::zero())
    }
}

/// Flattens a point into its real coordinates.
pub fn real_coords<T: Scalar>(z: &DVector<T>) -> Vec<f64> {
    z.iter().flat_map(|c| c.components()).collect()
}

/// Inverse of [`real_coords`].
pub fn from_real_coords<T: Scalar>(c: &[f64]) -> DVector<T> {
    DVector::from_iterator(
        c.len() / T::COMPONENTS,
        c.chunks(T::COMPONENTS).map(T::from_components),
    )
}

pub fn to_complex_matrix<T: Scalar>(m: &DMatrix<T>) -> DMatrix<Complex64> {
    m.map(|x| {
        let c = x.components();
        Complex64::new(c[0], c.get(1).copied().unwrap_or(0.0))
    })
}
