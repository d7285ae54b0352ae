use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width used when an unbounded side has to be sampled.
pub const SAMPLING_WINDOW: f64 = 10.0;

/// Axis-aligned closed box; `None` marks an unbounded side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxJson", into = "BoxJson")]
pub struct BoxRegion {
    lo: Vec<Option<f64>>,
    hi: Vec<Option<f64>>,
}

#[derive(Serialize, Deserialize)]
struct BoxJson {
    lo: Vec<Option<f64>>,
    hi: Vec<Option<f64>>,
}

impl TryFrom<BoxJson> for BoxRegion {
    type Error = Error;
    fn try_from(b: BoxJson) -> Result<Self> {
        BoxRegion::new(b.lo, b.hi)
    }
}

impl From<BoxRegion> for BoxJson {
    fn from(b: BoxRegion) -> Self {
        BoxJson { lo: b.lo, hi: b.hi }
    }
}

impl BoxRegion {
    pub fn new(lo: Vec<Option<f64>>, hi: Vec<Option<f64>>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::Malformed(format!(
                "box bounds have lengths {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        for (i, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if let (Some(l), Some(h)) = (l, h) {
                if l > h || l.is_nan() || h.is_nan() {
                    return Err(Error::Malformed(format!("box axis {i}: lo {l} > hi {h}")));
                }
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn compact(lo: &[f64], hi: &[f64]) -> Result<Self> {
        Self::new(
            lo.iter().copied().map(Some).collect(),
            hi.iter().copied().map(Some).collect(),
        )
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self::compact(&[lo], &[hi]).expect("ordered interval")
    }

    /// `[-r, r]^dim`.
    pub fn cube(dim: usize, r: f64) -> Self {
        Self::compact(&vec![-r; dim], &vec![r; dim]).expect("ordered cube")
    }

    pub fn unbounded(dim: usize) -> Self {
        Self {
            lo: vec![None; dim],
            hi: vec![None; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[Option<f64>] {
        &self.lo
    }

    pub fn hi(&self) -> &[Option<f64>] {
        &self.hi
    }

    pub fn is_compact(&self) -> bool {
        self.lo.iter().chain(&self.hi).all(Option::is_some)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter().enumerate().all(|(i, &x)| {
                self.lo[i].is_none_or(|l| x >= l) && self.hi[i].is_none_or(|h| x <= h)
            })
    }

    pub fn contains_interior(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter().enumerate().all(|(i, &x)| {
                self.lo[i].is_none_or(|l| x > l) && self.hi[i].is_none_or(|h| x < h)
            })
    }

    pub fn contains_box(&self, other: &BoxRegion) -> bool {
        other.dim() == self.dim()
            && (0..self.dim()).all(|i| {
                let lo_ok = match (self.lo[i], other.lo[i]) {
                    (None, _) => true,
                    (Some(_), None) => false,
                    (Some(a), Some(b)) => b >= a,
                };
                let hi_ok = match (self.hi[i], other.hi[i]) {
                    (None, _) => true,
                    (Some(_), None) => false,
                    (Some(a), Some(b)) => b <= a,
                };
                lo_ok && hi_ok
            })
    }

    /// Finite bounds per axis, replacing unbounded sides by a window of
    /// half-width `window` around the finite side (or around 0).
    pub fn sampling_bounds(&self, window: f64) -> Vec<(f64, f64)> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| match (*l, *h) {
                (Some(l), Some(h)) => (l, h),
                (Some(l), None) => (l, l + 2.0 * window),
                (None, Some(h)) => (h - 2.0 * window, h),
                (None, None) => (-window, window),
            })
            .collect()
    }

    /// Cartesian grid with `per_axis` points on each axis (endpoints included).
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        grid_over(&self.sampling_bounds(SAMPLING_WINDOW), per_axis, false)
    }

    /// Grid that stays strictly inside the box.
    pub fn interior_grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        grid_over(&self.sampling_bounds(SAMPLING_WINDOW), per_axis, true)
    }

    /// Distance (sup norm) from a point to the box, 0 inside.
    pub fn sup_distance(&self, p: &[f64]) -> f64 {
        p.iter()
            .enumerate()
            .map(|(i, &x)| {
                let below = self.lo[i].map_or(0.0, |l| (l - x).max(0.0));
                let above = self.hi[i].map_or(0.0, |h| (x - h).max(0.0));
                below.max(above)
            })
            .fold(0.0, f64::max)
    }
}

fn axis_points(lo: f64, hi: f64, n: usize, interior: bool) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5 * (lo + hi)];
    }
    if interior {
        (1..=n)
            .map(|i| lo + (hi - lo) * i as f64 / (n + 1) as f64)
            .collect()
    } else {
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

fn grid_over(bounds: &[(f64, f64)], per_axis: usize, interior: bool) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = bounds
        .iter()
        .map(|&(l, h)| axis_points(l, h, per_axis, interior))
        .collect();
    // first axis varies slowest
    let total: usize = axes.iter().map(Vec::len).product();
    (0..total)
        .map(|mut idx| {
            let mut p = vec![0.0; axes.len()];
            for (slot, axis) in p.iter_mut().zip(&axes).rev() {
                *slot = axis[idx % axis.len()];
                idx /= axis.len();
            }
            p
        })
        .collect()
}

/// Sampling density for grid-based checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points_per_axis: usize,
}

impl GridSpec {
    pub fn new(points_per_axis: usize) -> Self {
        Self { points_per_axis }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points_per_axis: 401,
        }
    }
}

/// A coordinate chart in the identity-coordinate model: a name and a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub name: String,
    pub dim: usize,
    pub domain: BoxRegion,
}

impl Chart {
    pub fn new(name: impl Into<String>, domain: BoxRegion) -> Self {
        Self {
            name: name.into(),
            dim: domain.dim(),
            domain,
        }
    }

    pub fn global(name: impl Into<String>, dim: usize) -> Self {
        Self::new(name, BoxRegion::unbounded(dim))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_json_with_unbounded_sides() {
        let b: BoxRegion = serde_json::from_str(r#"{"lo":[0.0,null],"hi":[null,2]}"#).unwrap();
        assert!(!b.is_compact());
        assert!(b.contains(&[5.0, -100.0]));
        assert!(!b.contains(&[-1.0, 0.0]));
        assert!(serde_json::from_str::<BoxRegion>(r#"{"lo":[3],"hi":[1]}"#).is_err());
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, r#"{"lo":[0.0,null],"hi":[null,2.0]}"#);
    }

    #[test]
    fn grid_hits_endpoints() {
        let g = BoxRegion::interval(0.5, 2.0).grid(401);
        assert_eq!(g.len(), 401);
        assert_eq!(g[0][0], 0.5);
        assert_eq!(g[400][0], 2.0);
        let g2 = BoxRegion::cube(2, 1.0).grid(3);
        assert_eq!(g2.len(), 9);
        // first axis slowest
        assert_eq!(g2[..4], [vec![-1.0, -1.0], vec![-1.0, 0.0], vec![-1.0, 1.0], vec![0.0, -1.0]]);
        let inner = BoxRegion::interval(0.0, 1.0).interior_grid(3);
        assert!(inner.iter().all(|p| p[0] > 0.0 && p[0] < 1.0));
    }
}
