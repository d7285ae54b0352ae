//! Maps, bumps and strata: float against exact, closed forms and sampled invariants.

use std::f64::consts::PI;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use proptest::prelude::*;
use stratlab::gallery;
use stratlab::geometry::jacobian_consistency;
use stratlab::geometry::Monomial;
use stratlab::strata::library::{circle, oscillating_curve, oscillating_curve_param};
use stratlab::strata::validate;
use stratlab::{BoxRegion, BumpFunction, DMatrix, DVector, DifferentiableMap, PolynomialMap, Stratum, Subspace};

fn poly() -> impl Strategy<Value = PolynomialMap> {
    (1usize..=3, 1usize..=3).prop_flat_map(|(m, n)| {
        let term = (proptest::collection::vec(0u32..=3, m), -1000i32..=1000)
            .prop_map(|(e, c)| Monomial { exponents: e, coeff: f64::from(c) });
        proptest::collection::vec(proptest::collection::vec(term, 0..6), n)
            .prop_map(move |coords| PolynomialMap::new(m, coords).expect("consistent"))
    })
}

/// Dyadic points in `[-2, 2]`, exactly representable on both sides.
fn dyadic(m: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec((-16i32..=16).prop_map(|k| f64::from(k) / 8.0), m)
}

fn magnitude(p: &PolynomialMap, z: &[f64], row: usize) -> f64 {
    p.coords()[row]
        .iter()
        .map(|t| t.coeff.abs() * t.exponents.iter().zip(z).map(|(&e, x)| x.abs().powi(e as i32)).product::<f64>())
        .sum()
}

fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().expect("finite")
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn polynomial_float_matches_exact(p in poly(), seed in dyadic(3)) {
        let m = p.source_dim();
        let z = &seed[..m];
        let zq: Vec<BigRational> = z.iter().map(|&x| BigRational::from_float(x).unwrap()).collect();
        let float = p.eval(&DVector::from_column_slice(z));
        let exact = p.eval_exact(&zq);
        for i in 0..p.target_dim() {
            let scale = magnitude(&p, z, i).max(1.0);
            prop_assert!((float[i] - to_f64(&exact[i])).abs() <= 1e-12 * scale);
        }
        let j = p.jacobian(&DVector::from_column_slice(z));
        let je = p.jacobian_exact(&zq);
        for i in 0..p.target_dim() {
            for k in 0..m {
                prop_assert!((j[(i, k)] - to_f64(&je[i][k])).abs() <= 1e-12 * (1.0 + 3.0 * magnitude(&p, z, i)));
            }
        }
    }

    #[test]
    fn polynomial_jacobian_matches_finite_differences(p in poly()) {
        let defect = jacobian_consistency(&p.scaled(1e-3), &BoxRegion::cube(p.source_dim(), 1.0)).unwrap();
        prop_assert!(defect <= 1e-5, "defect {defect}");
    }

    #[test]
    fn bump_plateau_support_and_range(r in 0.1f64..2.0, z in proptest::collection::vec(-5.0f64..5.0, 2)) {
        let b = BumpFunction::centered(2, r).unwrap();
        let v = b.value(&z);
        prop_assert!((0.0..=1.0).contains(&v));
        if b.plateau().contains(&z) {
            prop_assert_eq!(v, 1.0);
            prop_assert_eq!(b.gradient(&z), vec![0.0, 0.0]);
        }
        if !b.support().contains_interior(&z) {
            prop_assert_eq!(v, 0.0);
            prop_assert_eq!(b.gradient(&z), vec![0.0, 0.0]);
        }
        let g = b.gradient(&z);
        prop_assert!(g.iter().all(|x| x.abs() <= b.derivative_bound() + 1e-12));
    }

    #[test]
    fn circle_tangent_is_orthogonal_to_the_gradient(theta in 0.0f64..(2.0 * PI)) {
        let y = DVector::from_vec(vec![theta.cos(), theta.sin()]);
        let t = circle().tangent_at(&y, 1e-9).unwrap();
        // Dg = 2 (x, y)
        prop_assert!((t.basis().transpose() * &y).norm() <= 1e-9);
        prop_assert_eq!(t.dim(), 1);
    }

    #[test]
    fn oscillating_tangent_follows_the_velocity(t in 0.01f64..1.0) {
        let s = oscillating_curve();
        let y = oscillating_curve_param().eval(&DVector::from_element(1, t));
        prop_assume!(y[1].abs() > 1e-6);
        let tan = s.tangent_at(&y, 1e-9).unwrap();
        let vel = oscillating_curve_param().jacobian(&DVector::from_element(1, t));
        // the curve velocity spans the tangent line
        let d = stratlab::subspace::subspace_distance(&tan, &Subspace::from_spanning(&vel)).unwrap();
        prop_assert!(d <= 1e-9);
    }

    #[test]
    fn linear_stratum_tangent_is_the_subspace(e in proptest::collection::vec(-2i32..=2, 8)) {
        let b = DMatrix::from_fn(4, 2, |i, j| f64::from(e[i * 2 + j]));
        let sub = Subspace::from_spanning(&b);
        prop_assume!(sub.dim() > 0);
        let s = Stratum::linear("L", &sub, vec![]);
        let y = sub.basis().column(0).into_owned() * 0.75;
        let t = s.tangent_at(&y, 1e-9).unwrap();
        prop_assert!(stratlab::subspace::subspace_distance(&t, &sub).unwrap() <= 1e-9);
    }
}

#[test]
fn parametric_and_implicit_circle_tangents_agree() {
    let param = stratlab::FnMap::new(
        1,
        2,
        "t -> (cos t, sin t)",
        |t: &DVector<f64>| DVector::from_vec(vec![t[0].cos(), t[0].sin()]),
        |t: &DVector<f64>| DMatrix::from_row_slice(2, 1, &[-t[0].sin(), t[0].cos()]),
    );
    let p = Stratum::parametric("circle", std::sync::Arc::new(param), BoxRegion::interval(-4.0, 4.0));
    for k in 0..24 {
        let th = -3.0 + 0.25 * k as f64;
        let y = DVector::from_vec(vec![th.cos(), th.sin()]);
        let a = p.tangent_at(&y, 1e-9).unwrap();
        let b = circle().tangent_at(&y, 1e-9).unwrap();
        assert!(stratlab::subspace::subspace_distance(&a, &b).unwrap() <= 1e-6, "theta = {th}");
    }
}

#[test]
fn validation_reproduces_the_documented_minimal_dimension() {
    let window = BoxRegion::cube(2, 2.0);
    let cases = [
        (gallery::golubitsky_sigma(), 1),
        (gallery::circle_sigma(), 1),
        (gallery::oscillation_sigma(), 1),
        (gallery::nonclosed_union_sigma(), 0),
        (gallery::top_dimensional_sigma(), 1),
    ];
    for (sigma, r) in cases {
        let rep = validate(&sigma, &window, 41, 1e-9);
        assert!(rep.valid, "{}: {rep:?}", sigma.name);
        assert_eq!(rep.r, Some(r), "{}", sigma.name);
    }
    let rep = validate(&gallery::complex_axes_sigma(), &BoxRegion::cube(4, 1.0), 5, 1e-9);
    assert!(rep.valid && rep.r == Some(1), "{rep:?}");
}
