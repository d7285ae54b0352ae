use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{BoxRegion, BumpFunction, DifferentiableMap, MapRef, PolynomialMap};
use crate::scalar::Scalar;

/// `z -> offset + matrix * z`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap<T: Scalar = f64> {
    pub offset: DVector<T>,
    pub matrix: DMatrix<T>,
}

impl<T: Scalar> AffineMap<T> {
    pub fn new(offset: DVector<T>, matrix: DMatrix<T>) -> Self {
        assert_eq!(offset.len(), matrix.nrows(), "offset length must match rows");
        Self { offset, matrix }
    }

    pub fn linear(matrix: DMatrix<T>) -> Self {
        Self::new(DVector::zeros(matrix.nrows()), matrix)
    }

    pub fn constant(value: DVector<T>, source_dim: usize) -> Self {
        let n = value.len();
        Self::new(value, DMatrix::zeros(n, source_dim))
    }
}

impl<T: Scalar> DifferentiableMap<T> for AffineMap<T> {
    fn source_dim(&self) -> usize {
        self.matrix.ncols()
    }
    fn target_dim(&self) -> usize {
        self.matrix.nrows()
    }
    fn eval(&self, z: &DVector<T>) -> DVector<T> {
        &self.offset + &self.matrix * z
    }
    fn jacobian(&self, _z: &DVector<T>) -> DMatrix<T> {
        self.matrix.clone()
    }
    fn describe(&self) -> String {
        format!(
            "affine map {}x{} (offset {:?})",
            self.matrix.nrows(),
            self.matrix.ncols(),
            self.offset.iter().flat_map(|c| c.components()).collect::<Vec<_>>()
        )
    }
    fn as_polynomial(&self) -> Option<PolynomialMap<T>> {
        Some(PolynomialMap::affine(&self.matrix, &self.offset))
    }
}

type EvalFn<T> = Arc<dyn Fn(&DVector<T>) -> DVector<T> + Send + Sync>;
type JacFn<T> = Arc<dyn Fn(&DVector<T>) -> DMatrix<T> + Send + Sync>;

/// A map given by closures for the value and the Jacobian.
#[derive(Clone)]
pub struct FnMap<T: Scalar = f64> {
    m: usize,
    n: usize,
    eval: EvalFn<T>,
    jac: JacFn<T>,
    description: String,
    domain: Option<BoxRegion>,
}

impl<T: Scalar> FnMap<T> {
    pub fn new(
        m: usize,
        n: usize,
        description: impl Into<String>,
        eval: impl Fn(&DVector<T>) -> DVector<T> + Send + Sync + 'static,
        jac: impl Fn(&DVector<T>) -> DMatrix<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            m,
            n,
            eval: Arc::new(eval),
            jac: Arc::new(jac),
            description: description.into(),
            domain: None,
        }
    }

    pub fn with_domain(mut self, domain: BoxRegion) -> Self {
        self.domain = Some(domain);
        self
    }
}

impl<T: Scalar> DifferentiableMap<T> for FnMap<T> {
    fn source_dim(&self) -> usize {
        self.m
    }
    fn target_dim(&self) -> usize {
        self.n
    }
    fn eval(&self, z: &DVector<T>) -> DVector<T> {
        (self.eval)(z)
    }
    fn jacobian(&self, z: &DVector<T>) -> DMatrix<T> {
        (self.jac)(z)
    }
    fn describe(&self) -> String {
        self.description.clone()
    }
    fn domain(&self) -> Option<&BoxRegion> {
        self.domain.as_ref()
    }
}

/// `z -> base(z - input_shift) + output_shift`.
#[derive(Clone)]
pub struct Shifted<T: Scalar = f64> {
    base: MapRef<T>,
    input_shift: DVector<T>,
    output_shift: DVector<T>,
}

impl<T: Scalar> Shifted<T> {
    pub fn new(base: MapRef<T>, input_shift: DVector<T>, output_shift: DVector<T>) -> Self {
        assert_eq!(input_shift.len(), base.source_dim());
        assert_eq!(output_shift.len(), base.target_dim());
        Self {
            base,
            input_shift,
            output_shift,
        }
    }

    /// `z -> base(z - a)`.
    pub fn input(base: MapRef<T>, a: DVector<T>) -> Self {
        let n = base.target_dim();
        Self::new(base, a, DVector::zeros(n))
    }

    /// `z -> base(z) + b`.
    pub fn output(base: MapRef<T>, b: DVector<T>) -> Self {
        let m = base.source_dim();
        Self::new(base, DVector::zeros(m), b)
    }
}

impl<T: Scalar> DifferentiableMap<T> for Shifted<T> {
    fn source_dim(&self) -> usize {
        self.base.source_dim()
    }
    fn target_dim(&self) -> usize {
        self.base.target_dim()
    }
    fn eval(&self, z: &DVector<T>) -> DVector<T> {
        self.base.eval(&(z - &self.input_shift)) + &self.output_shift
    }
    fn jacobian(&self, z: &DVector<T>) -> DMatrix<T> {
        self.base.jacobian(&(z - &self.input_shift))
    }
    fn describe(&self) -> String {
        let a: Vec<f64> = self.input_shift.iter().flat_map(|c| c.components()).collect();
        let b: Vec<f64> = self.output_shift.iter().flat_map(|c| c.components()).collect();
        format!("{}(z - {a:?}) + {b:?}", self.base.describe())
    }
}

/// `z -> base(z) + λ(z) * local(z)` for a bump `λ`.
#[derive(Clone)]
pub struct Localized {
    base: MapRef,
    bump: BumpFunction,
    local: MapRef,
}

impl Localized {
    pub fn new(base: MapRef, bump: BumpFunction, local: MapRef) -> Self {
        assert_eq!(base.source_dim(), local.source_dim());
        assert_eq!(base.target_dim(), local.target_dim());
        assert_eq!(base.source_dim(), bump.dim());
        Self { base, bump, local }
    }

    pub fn bump(&self) -> &BumpFunction {
        &self.bump
    }

    pub fn base(&self) -> &MapRef {
        &self.base
    }
}

impl DifferentiableMap for Localized {
    fn source_dim(&self) -> usize {
        self.base.source_dim()
    }
    fn target_dim(&self) -> usize {
        self.base.target_dim()
    }
    fn eval(&self, z: &DVector<f64>) -> DVector<f64> {
        let lam = self.bump.value(z.as_slice());
        let b = self.base.eval(z);
        if lam == 0.0 {
            return b;
        }
        b + self.local.eval(z) * lam
    }
    fn jacobian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let lam = self.bump.value(z.as_slice());
        let j = self.base.jacobian(z);
        if lam == 0.0 {
            return j;
        }
        let grad = DVector::from_vec(self.bump.gradient(z.as_slice()));
        j + self.local.jacobian(z) * lam + self.local.eval(z) * grad.transpose()
    }
    fn describe(&self) -> String {
        format!(
            "{} + bump * [{}]",
            self.base.describe(),
            self.local.describe()
        )
    }
    fn domain(&self) -> Option<&BoxRegion> {
        self.base.domain()
    }
}

/// A map with a restricted domain and the chart pair it is expressed in.
#[derive(Clone)]
pub struct Restricted<T: Scalar = f64> {
    base: MapRef<T>,
    domain: BoxRegion,
    pub source_chart: String,
    pub target_chart: String,
}

impl<T: Scalar> Restricted<T> {
    pub fn new(base: MapRef<T>, domain: BoxRegion, source_chart: String, target_chart: String) -> Self {
        Self {
            base,
            domain,
            source_chart,
            target_chart,
        }
    }
}

impl<T: Scalar> DifferentiableMap<T> for Restricted<T> {
    fn source_dim(&self) -> usize {
        self.base.source_dim()
    }
    fn target_dim(&self) -> usize {
        self.base.target_dim()
    }
    fn eval(&self, z: &DVector<T>) -> DVector<T> {
        self.base.eval(z)
    }
    fn jacobian(&self, z: &DVector<T>) -> DMatrix<T> {
        self.base.jacobian(z)
    }
    fn describe(&self) -> String {
        format!(
            "{} in charts ({}, {})",
            self.base.describe(),
            self.source_chart,
            self.target_chart
        )
    }
    fn domain(&self) -> Option<&BoxRegion> {
        Some(&self.domain)
    }
    fn as_polynomial(&self) -> Option<PolynomialMap<T>> {
        self.base.as_polynomial()
    }
}
