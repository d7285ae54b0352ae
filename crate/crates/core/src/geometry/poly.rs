use nalgebra::{DMatrix, DVector};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use super::{BoxRegion, DifferentiableMap};
use crate::error::{Error, Result};
use crate::scalar::{Field, Scalar};
use crate::subspace::parse_entry;

/// `coeff * z^exponents`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial<T: Scalar = f64> {
    pub exponents: Vec<u32>,
    pub coeff: T,
}

/// Polynomial map given coordinate-wise by lists of monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialMap<T: Scalar = f64> {
    m: usize,
    coords: Vec<Vec<Monomial<T>>>,
    domain: Option<BoxRegion>,
}

fn pow<F: Clone + num_traits::One + std::ops::Mul<Output = F>>(x: &F, e: u32) -> F {
    let mut acc = F::one();
    for _ in 0..e {
        acc = acc * x.clone();
    }
    acc
}

impl<T: Scalar> PolynomialMap<T> {
    pub fn new(m: usize, coords: Vec<Vec<Monomial<T>>>) -> Result<Self> {
        for (i, terms) in coords.iter().enumerate() {
            for t in terms {
                if t.exponents.len() != m {
                    return Err(Error::Malformed(format!(
                        "output {i}: multi-index {:?} has length {}, expected {m}",
                        t.exponents,
                        t.exponents.len()
                    )));
                }
            }
        }
        Ok(Self {
            m,
            coords,
            domain: None,
        })
    }

    /// Builds from `(multi-index, coefficient)` pairs per output coordinate.
    pub fn from_terms(m: usize, coords: &[&[(&[u32], T)]]) -> Self {
        let coords = coords
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|(e, c)| Monomial {
                        exponents: e.to_vec(),
                        coeff: *c,
                    })
                    .collect()
            })
            .collect();
        Self::new(m, coords).expect("consistent multi-indices")
    }

    /// The linear map `z -> a z + b`.
    pub fn affine(matrix: &DMatrix<T>, offset: &DVector<T>) -> Self {
        let (n, m) = matrix.shape();
        let coords = (0..n)
            .map(|i| {
                let mut terms = Vec::new();
                if offset[i] != T::zero() {
                    terms.push(Monomial {
                        exponents: vec![0; m],
                        coeff: offset[i],
                    });
                }
                for j in 0..m {
                    if matrix[(i, j)] != T::zero() {
                        let mut e = vec![0; m];
                        e[j] = 1;
                        terms.push(Monomial {
                            exponents: e,
                            coeff: matrix[(i, j)],
                        });
                    }
                }
                terms
            })
            .collect();
        Self {
            m,
            coords,
            domain: None,
        }
    }

    pub fn with_domain(mut self, domain: BoxRegion) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn coords(&self) -> &[Vec<Monomial<T>>] {
        &self.coords
    }

    pub fn degree(&self) -> u32 {
        self.coords
            .iter()
            .flatten()
            .map(|t| t.exponents.iter().sum())
            .max()
            .unwrap_or(0)
    }

    /// Every term has degree at most one.
    pub fn is_affine(&self) -> bool {
        self.degree() <= 1
    }

    pub fn scaled(&self, s: T) -> Self {
        let coords = self
            .coords
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|t| Monomial {
                        exponents: t.exponents.clone(),
                        coeff: t.coeff * s,
                    })
                    .collect()
            })
            .collect();
        Self {
            m: self.m,
            coords,
            domain: self.domain.clone(),
        }
    }

    pub fn eval_exact(&self, z: &[T::Exact]) -> Vec<T::Exact> {
        self.coords
            .iter()
            .map(|terms| {
                terms.iter().fold(T::exact_from_integer(0), |acc, t| {
                    let mono = t
                        .exponents
                        .iter()
                        .zip(z)
                        .fold(t.coeff.to_exact(), |p, (&e, x)| p * pow(x, e));
                    acc + mono
                })
            })
            .collect()
    }

    pub fn jacobian_exact(&self, z: &[T::Exact]) -> Vec<Vec<T::Exact>> {
        self.coords
            .iter()
            .map(|terms| {
                (0..self.m)
                    .map(|j| {
                        terms.iter().fold(T::exact_from_integer(0), |acc, t| {
                            let ej = t.exponents[j];
                            if ej == 0 {
                                return acc;
                            }
                            let mut p = t.coeff.to_exact() * T::exact_from_integer(ej as i64);
                            for (i, (&e, x)) in t.exponents.iter().zip(z).enumerate() {
                                let e = if i == j { e - 1 } else { e };
                                p = p * pow(x, e);
                            }
                            acc + p
                        })
                    })
                    .collect()
            })
            .collect()
    }
}

impl<T: Scalar> DifferentiableMap<T> for PolynomialMap<T> {
    fn source_dim(&self) -> usize {
        self.m
    }

    fn target_dim(&self) -> usize {
        self.coords.len()
    }

    fn eval(&self, z: &DVector<T>) -> DVector<T> {
        DVector::from_iterator(
            self.coords.len(),
            self.coords.iter().map(|terms| {
                terms.iter().fold(T::zero(), |acc, t| {
                    acc + t
                        .exponents
                        .iter()
                        .zip(z.iter())
                        .fold(t.coeff, |p, (&e, x)| p * pow(x, e))
                })
            }),
        )
    }

    fn jacobian(&self, z: &DVector<T>) -> DMatrix<T> {
        DMatrix::from_fn(self.coords.len(), self.m, |i, j| {
            self.coords[i].iter().fold(T::zero(), |acc, t| {
                let ej = t.exponents[j];
                if ej == 0 {
                    return acc;
                }
                let mut p = t.coeff * T::from_real(ej as f64);
                for (k, (&e, x)) in t.exponents.iter().zip(z.iter()).enumerate() {
                    p *= pow(x, if k == j { e - 1 } else { e });
                }
                acc + p
            })
        })
    }

    fn describe(&self) -> String {
        let vars: Vec<String> = if self.m == 1 {
            vec!["x".into()]
        } else {
            (1..=self.m).map(|i| format!("x{i}")).collect()
        };
        let parts: Vec<String> = self
            .coords
            .iter()
            .map(|terms| {
                if terms.is_empty() {
                    return "0".into();
                }
                terms
                    .iter()
                    .map(|t| {
                        let mono: Vec<String> = t
                            .exponents
                            .iter()
                            .zip(&vars)
                            .filter(|(e, _)| **e > 0)
                            .map(|(e, v)| if *e == 1 { v.clone() } else { format!("{v}^{e}") })
                            .collect();
                        let c = t.coeff.components();
                        let coeff = if c.len() == 2 && c[1] != 0.0 {
                            format!("({}{:+}i)", c[0], c[1])
                        } else {
                            format!("{}", c[0])
                        };
                        if mono.is_empty() {
                            coeff
                        } else {
                            format!("{coeff}*{}", mono.join("*"))
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(" + ")
            })
            .collect();
        format!("({})", parts.join(", "))
    }

    fn domain(&self) -> Option<&BoxRegion> {
        self.domain.as_ref()
    }

    fn as_polynomial(&self) -> Option<PolynomialMap<T>> {
        Some(self.clone())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CoeffJson {
    Real(f64),
    Pair(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    m: usize,
    n: usize,
    field: Field,
    coords: Vec<Vec<(Vec<u32>, CoeffJson)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<BoxRegion>,
}

impl<T: Scalar> Serialize for PolynomialMap<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let coords = self
            .coords
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|t| {
                        let c = t.coeff.components();
                        let coeff = if c.len() == 1 {
                            CoeffJson::Real(c[0])
                        } else {
                            CoeffJson::Pair(c)
                        };
                        (t.exponents.clone(), coeff)
                    })
                    .collect()
            })
            .collect();
        PolyJson {
            m: self.m,
            n: self.coords.len(),
            field: T::FIELD,
            coords,
            domain: self.domain.clone(),
        }
        .serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for PolynomialMap<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PolyJson::deserialize(d)?;
        if raw.field != T::FIELD {
            return Err(de::Error::custom(format!(
                "expected a {} map, found field `{}`",
                T::FIELD,
                raw.field
            )));
        }
        if raw.coords.len() != raw.n {
            return Err(de::Error::custom(format!(
                "n = {} but {} coordinate lists given",
                raw.n,
                raw.coords.len()
            )));
        }
        let mut coords = Vec::with_capacity(raw.n);
        for terms in raw.coords {
            let mut out = Vec::with_capacity(terms.len());
            for (exponents, c) in terms {
                let coeff = match c {
                    CoeffJson::Real(x) => T::from_components(&[x, 0.0]),
                    CoeffJson::Pair(p) => parse_entry::<T>(&p).map_err(de::Error::custom)?,
                };
                out.push(Monomial { exponents, coeff });
            }
            coords.push(out);
        }
        let mut p = PolynomialMap::new(raw.m, coords).map_err(de::Error::custom)?;
        if let Some(b) = raw.domain {
            if b.dim() != raw.m * T::COMPONENTS {
                return Err(de::Error::custom(format!(
                    "domain box has dimension {}, expected {}",
                    b.dim(),
                    raw.m * T::COMPONENTS
                )));
            }
            p.domain = Some(b);
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_complex::Complex64;
    use num_rational::BigRational;

    fn parabola() -> PolynomialMap {
        PolynomialMap::from_terms(1, &[&[(&[1], 1.0)], &[(&[2], 1.0), (&[0], 1.0)]])
    }

    #[test]
    fn eval_and_jacobian() {
        let f = parabola();
        let z = DVector::from_vec(vec![0.7]);
        let y = f.eval(&z);
        assert_eq!(y[0], 0.7);
        assert!((y[1] - 1.49).abs() < 1e-15);
        let j = f.jacobian(&z);
        assert_eq!(j.shape(), (2, 1));
        assert_eq!(j[(0, 0)], 1.0);
        assert!((j[(1, 0)] - 1.4).abs() < 1e-15);
    }

    #[test]
    fn exact_matches_float() {
        let f = parabola();
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        let y = f.eval_exact(&[half.clone()]);
        assert_eq!(y[1], BigRational::new(BigInt::from(5), BigInt::from(4)));
        let j = f.jacobian_exact(&[half]);
        assert_eq!(j[1][0], BigRational::from_integer(BigInt::from(1)));
    }

    #[test]
    fn json_roundtrip() {
        let json = r#"{"m":1,"n":2,"field":"real","coords":[[[[1],1.0]],[[[2],1.0],[[0],1.0]]]}"#;
        let f: PolynomialMap = serde_json::from_str(json).unwrap();
        assert_eq!(f, parabola());
        let back: PolynomialMap = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<PolynomialMap>(r#"{"m":2,"n":1,"field":"real","coords":[[[[1],1.0]]]}"#).is_err());
    }

    #[test]
    fn complex_coefficients() {
        let json = r#"{"m":1,"n":1,"field":"complex","coords":[[[[2],[0.0,1.0]]]]}"#;
        let f: PolynomialMap<Complex64> = serde_json::from_str(json).unwrap();
        let z = DVector::from_vec(vec![Complex64::new(1.0, 1.0)]);
        // i * (1+i)^2 = i * 2i = -2
        assert!((f.eval(&z)[0] - Complex64::new(-2.0, 0.0)).norm() < 1e-15);
        // d/dz = 2 i z = 2i(1+i) = -2 + 2i
        assert!((f.jacobian(&z)[(0, 0)] - Complex64::new(-2.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn affine_builder() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, -1.0]);
        let b = DVector::from_vec(vec![0.5, 0.0]);
        let p = PolynomialMap::affine(&a, &b);
        assert!(p.is_affine());
        let z = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(p.eval(&z), &a * &z + &b);
        assert_eq!(p.jacobian(&z), a);
    }
}
