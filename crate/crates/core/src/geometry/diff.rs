use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{BoxRegion, Chart, DifferentiableMap, GridSpec, MapRef, Restricted};
use crate::error::{Error, Result};
use crate::scalar::{from_real_coords, real_coords, Scalar};

/// Points per axis used by [`jacobian_consistency`].
pub const CONSISTENCY_POINTS: usize = 17;

/// `eps^(1/3) * (1 + |z|)`.
pub fn default_fd_step<T: Scalar>(z: &DVector<T>) -> f64 {
    f64::EPSILON.cbrt() * (1.0 + z.norm())
}

/// Central-difference Jacobian with step `h` along each real coordinate axis
/// of the source (for holomorphic maps this is the complex derivative).
pub fn fd_jacobian<T: Scalar>(
    f: &dyn DifferentiableMap<T>,
    z: &DVector<T>,
    h: f64,
) -> Result<DMatrix<T>> {
    assert!(h > 0.0, "finite-difference step must be positive");
    let m = f.source_dim();
    let n = f.target_dim();
    let mut out = DMatrix::zeros(n, m);
    for j in 0..m {
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[j] += T::from_real(h);
        zm[j] -= T::from_real(h);
        if let Some(dom) = f.domain() {
            for p in [&zp, &zm] {
                let c = real_coords(p);
                if !dom.contains(&c) {
                    return Err(Error::DomainEscape { point: c });
                }
            }
        }
        let col = (f.eval(&zp) - f.eval(&zm)).unscale(2.0 * h);
        out.set_column(j, &col);
    }
    Ok(out)
}

/// Worst relative Jacobian defect `|J - J_fd|_max / (1 + |J|_max)` over a
/// [`CONSISTENCY_POINTS`]-per-axis grid of `test_box` (real coordinates).
pub fn jacobian_consistency<T: Scalar>(f: &dyn DifferentiableMap<T>, test_box: &BoxRegion) -> Result<f64> {
    let mut worst = 0.0f64;
    for p in test_box.grid(CONSISTENCY_POINTS) {
        let z: DVector<T> = from_real_coords(&p);
        let j = f.jacobian(&z);
        let fd = fd_jacobian(f, &z, default_fd_step(&z))?;
        let scale = 1.0 + max_abs(&j);
        worst = worst.max(max_abs(&(j - fd)) / scale);
    }
    Ok(worst)
}

fn max_abs<T: Scalar>(m: &DMatrix<T>) -> f64 {
    m.iter().map(|x| x.modulus()).fold(0.0, f64::max)
}

/// Sampled C^1 distance on `k`: the maximum over grid points of
/// `max(|f - g|_inf, |Df - Dg|_max)`.
pub fn c1_distance<T: Scalar>(
    f: &dyn DifferentiableMap<T>,
    g: &dyn DifferentiableMap<T>,
    k: &BoxRegion,
    grid: GridSpec,
) -> f64 {
    assert_eq!(f.source_dim(), g.source_dim());
    assert_eq!(f.target_dim(), g.target_dim());
    k.grid(grid.points_per_axis)
        .par_iter()
        .map(|p| {
            let z: DVector<T> = from_real_coords(p);
            let dv = (f.eval(&z) - g.eval(&z))
                .iter()
                .map(|x| x.modulus())
                .fold(0.0, f64::max);
            let dj = max_abs(&(f.jacobian(&z) - g.jacobian(&z)));
            dv.max(dj)
        })
        .reduce(|| 0.0, f64::max)
}

/// `f` expressed in the chart pair. With identity charts this is `f`
/// restricted to the source box, after checking on a sample grid that the
/// image stays in the target box.
pub fn local_representative<T: Scalar>(
    f: MapRef<T>,
    src: &Chart,
    tgt: &Chart,
    grid: GridSpec,
) -> Result<MapRef<T>> {
    if src.dim != f.source_dim() * T::COMPONENTS || tgt.dim != f.target_dim() * T::COMPONENTS {
        return Err(Error::DimensionMismatch(format!(
            "charts have dimensions ({}, {}), map has ({}, {})",
            src.dim,
            tgt.dim,
            f.source_dim(),
            f.target_dim()
        )));
    }
    for p in src.domain.grid(grid.points_per_axis) {
        let image = real_coords(&f.eval(&from_real_coords::<T>(&p)));
        if !tgt.domain.contains(&image) {
            return Err(Error::ChartMismatch {
                chart: tgt.name.clone(),
                point: image,
            });
        }
    }
    Ok(Arc::new(Restricted::new(
        f,
        src.domain.clone(),
        src.name.clone(),
        tgt.name.clone(),
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AffineMap, BumpFunction, PolynomialMap, Shifted};

    fn parabola(c0: f64) -> PolynomialMap {
        PolynomialMap::from_terms(1, &[&[(&[1], 1.0)], &[(&[2], 1.0), (&[0], c0)]])
    }

    fn hirsch_shift(c: f64) -> Shifted {
        Shifted::input(Arc::new(parabola(1.0)), DVector::from_vec(vec![c]))
    }

    #[test]
    fn fd_examples() {
        let l = AffineMap::linear(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        let z = DVector::from_vec(vec![0.3, -0.7]);
        let j = fd_jacobian(&l, &z, 1e-4).unwrap();
        assert!((j - DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0])).amax() < 1e-12);

        let j = fd_jacobian(&parabola(0.0), &DVector::from_vec(vec![1.0]), 1e-4).unwrap();
        assert!((j[(0, 0)] - 1.0).abs() < 1e-7);
        assert!((j[(1, 0)] - 2.0).abs() < 1e-7);

        let j = fd_jacobian(&parabola(1.0), &DVector::from_vec(vec![0.5]), 1e-4).unwrap();
        assert!((j[(1, 0)] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn fd_domain_escape() {
        let f = parabola(0.0).with_domain(BoxRegion::interval(0.0, 1.0));
        let err = fd_jacobian(&f, &DVector::from_vec(vec![1.0]), 1e-3).unwrap_err();
        assert!(matches!(err, Error::DomainEscape { .. }));
    }

    #[test]
    fn c1_distance_examples() {
        let f = parabola(1.0);
        let k = BoxRegion::interval(0.5, 2.0);
        assert_eq!(c1_distance(&f, &f, &k, GridSpec::default()), 0.0);
        let d = c1_distance(&hirsch_shift(0.01), &f, &k, GridSpec::default());
        assert!((d - 0.0399).abs() < 1e-4, "{d}");
        let d = c1_distance(&hirsch_shift(1.0), &f, &k, GridSpec::default());
        assert!((d - 3.0).abs() < 0.1, "{d}");
    }

    #[test]
    fn local_representative_examples() {
        let f: MapRef = Arc::new(parabola(1.0));
        let src = Chart::new("U", BoxRegion::new(vec![Some(0.0)], vec![None]).unwrap());
        let tgt = Chart::global("V", 2);
        let r = local_representative(f.clone(), &src, &tgt, GridSpec::new(41)).unwrap();
        let z = DVector::from_vec(vec![0.7]);
        assert_eq!(r.eval(&z), f.eval(&z));
        assert_eq!(r.domain(), Some(&src.domain));

        let g: MapRef = Arc::new(parabola(0.0));
        let src = Chart::new("U", BoxRegion::interval(-3.0, 3.0));
        let tgt = Chart::new("V", BoxRegion::cube(2, 5.0));
        match local_representative(g, &src, &tgt, GridSpec::new(7)) {
            Err(Error::ChartMismatch { point, .. }) => assert!(point == vec![-3.0, 9.0] || point == vec![3.0, 9.0]),
            other => panic!("expected ChartMismatch, got {other:?}"),
        }
    }

    #[test]
    fn shipped_maps_are_consistent() {
        let test_box = BoxRegion::cube(1, 2.5);
        assert!(jacobian_consistency(&parabola(1.0), &test_box).unwrap() < 1e-5);
        assert!(jacobian_consistency(&hirsch_shift(0.3), &test_box).unwrap() < 1e-5);
        let bump = BumpFunction::centered(2, 0.5).unwrap();
        assert!(jacobian_consistency(&bump, &BoxRegion::cube(2, 1.5)).unwrap() < 1e-5);
    }
}
