use nalgebra::{DMatrix, DVector};

use super::{BoxRegion, DifferentiableMap};
use crate::error::{Error, Result};

fn sigma(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

fn sigma_prime(t: f64) -> f64 {
    if t > 0.0 {
        sigma(t) / (t * t)
    } else {
        0.0
    }
}

/// Transition from 1 at `u = 0` to 0 at `u = 1`, with value and derivative.
fn transition(u: f64) -> (f64, f64) {
    if u <= 0.0 {
        return (1.0, 0.0);
    }
    if u >= 1.0 {
        return (0.0, 0.0);
    }
    let a = sigma(1.0 - u);
    let b = sigma(u);
    let s = a + b;
    let d = -(sigma_prime(1.0 - u) * b + a * sigma_prime(u)) / (s * s);
    (a / s, d)
}

/// Smooth function equal to 1 on the box `K` and 0 outside the box `K'`.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpFunction {
    inner: Vec<(f64, f64)>,
    outer: Vec<(f64, f64)>,
}

impl BumpFunction {
    /// Both boxes must be compact and `K` must lie strictly inside `K'` on every side.
    pub fn new(inner: BoxRegion, outer: BoxRegion) -> Result<Self> {
        if !inner.is_compact() || !outer.is_compact() {
            return Err(Error::NoncompactSet("bump boxes must be bounded".into()));
        }
        if inner.dim() != outer.dim() {
            return Err(Error::DimensionMismatch(format!(
                "bump boxes have dimensions {} and {}",
                inner.dim(),
                outer.dim()
            )));
        }
        let k = inner.sampling_bounds(0.0);
        let kp = outer.sampling_bounds(0.0);
        for (i, ((a, b), (c, d))) in k.iter().zip(&kp).enumerate() {
            if !(c < a && b < d) {
                return Err(Error::InvalidOperands(format!(
                    "axis {i}: plateau [{a}, {b}] not strictly inside support [{c}, {d}]"
                )));
            }
        }
        Ok(Self {
            inner: k,
            outer: kp,
        })
    }

    /// Plateau `[-r, r]^dim`, support `[-2r, 2r]^dim`.
    pub fn centered(dim: usize, r: f64) -> Result<Self> {
        Self::new(BoxRegion::cube(dim, r), BoxRegion::cube(dim, 2.0 * r))
    }

    pub fn dim(&self) -> usize {
        self.inner.len()
    }

    pub fn plateau(&self) -> BoxRegion {
        let (lo, hi): (Vec<f64>, Vec<f64>) = self.inner.iter().copied().unzip();
        BoxRegion::compact(&lo, &hi).expect("validated")
    }

    pub fn support(&self) -> BoxRegion {
        let (lo, hi): (Vec<f64>, Vec<f64>) = self.outer.iter().copied().unzip();
        BoxRegion::compact(&lo, &hi).expect("validated")
    }

    fn axis(&self, i: usize, z: f64) -> (f64, f64) {
        let (a, b) = self.inner[i];
        let (c, d) = self.outer[i];
        if z > b {
            let (h, dh) = transition((z - b) / (d - b));
            (h, dh / (d - b))
        } else if z < a {
            let (h, dh) = transition((a - z) / (a - c));
            (h, -dh / (a - c))
        } else {
            (1.0, 0.0)
        }
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        z.iter()
            .enumerate()
            .map(|(i, &x)| self.axis(i, x).0)
            .product()
    }

    pub fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let parts: Vec<(f64, f64)> = z.iter().enumerate().map(|(i, &x)| self.axis(i, x)).collect();
        (0..z.len())
            .map(|j| {
                parts
                    .iter()
                    .enumerate()
                    .map(|(i, &(h, dh))| if i == j { dh } else { h })
                    .product()
            })
            .collect()
    }

    /// Upper bound on `max_j |∂λ/∂z_j|`, from a dense sample of each axis profile.
    pub fn derivative_bound(&self) -> f64 {
        const SAMPLES: usize = 2001;
        let mut best = 0.0f64;
        for i in 0..self.dim() {
            let (c, d) = self.outer[i];
            for s in 0..SAMPLES {
                let z = c + (d - c) * s as f64 / (SAMPLES - 1) as f64;
                best = best.max(self.axis(i, z).1.abs());
            }
        }
        best * 1.01
    }
}

impl DifferentiableMap for BumpFunction {
    fn source_dim(&self) -> usize {
        self.dim()
    }
    fn target_dim(&self) -> usize {
        1
    }
    fn eval(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, self.value(z.as_slice()))
    }
    fn jacobian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, self.dim(), &self.gradient(z.as_slice()))
    }
    fn describe(&self) -> String {
        format!("bump(K = {:?}, K' = {:?})", self.inner, self.outer)
    }
}
