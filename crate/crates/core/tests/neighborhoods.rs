//! Weak neighbourhoods and openness probes.

use std::sync::Arc;

use proptest::prelude::*;
use stratlab::gallery::{self, hirsch_c1_distance, hirsch_clearance_exact, hirsch_shift, hirsch_spec};
use stratlab::neighborhoods::{directed_probe, nbhd_contains, probe_openness, sample_perturbations, WeakNeighborhoodSpec};
use stratlab::{BoxRegion, GridSpec, Tolerances};

const GRID: usize = 101;

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    /// Sampled distance of the shifted map equals the closed form on the grid.
    #[test]
    fn hirsch_shift_distance_matches_closed_form(c in 0.0f64..1.0) {
        let spec = hirsch_spec(0.1);
        let d = spec.distance(&hirsch_shift(c), GridSpec::new(GRID));
        prop_assert!((d - hirsch_c1_distance(c)).abs() <= 1e-9);
        prop_assert_eq!(nbhd_contains(&spec, &hirsch_shift(c), GridSpec::new(GRID)), d < 0.1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn sampled_perturbations_stay_inside(seed in any::<u64>(), eps in 0.01f64..0.5) {
        let spec = hirsch_spec(eps);
        let grid = GridSpec::new(GRID);
        let samples = sample_perturbations(&spec, 20, seed, grid).unwrap();
        for p in &samples {
            prop_assert!(p.distance < eps);
            prop_assert!(nbhd_contains(&spec, p.map.as_ref(), grid));
        }
    }
}

#[test]
fn closed_form_examples() {
    // boundary of membership at eps = 0.1 and the clearance of the base map
    assert!((hirsch_c1_distance(2.0 - 3.9f64.sqrt()) - 0.1).abs() <= 1e-15);
    assert!((hirsch_clearance_exact() - (1.8125f64.sqrt() - 1.0)).abs() <= 1e-15);
    assert!((hirsch_c1_distance(0.025) - 0.099375).abs() <= 1e-15);
}

#[test]
fn probes_are_bitwise_reproducible() {
    let tol = Tolerances::default();
    let spec = hirsch_spec(0.05);
    let sigma = gallery::circle_sigma();
    let run = || {
        let r = probe_openness(&spec, &sigma, 30, 11, GridSpec::new(GRID), None, &tol).unwrap();
        serde_json::to_string(&r).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn circle_probe_is_transverse_on_ten_seeds() {
    let tol = Tolerances::default();
    let eps = 0.05f64.min(hirsch_clearance_exact() / 2.0);
    let spec = hirsch_spec(eps);
    let sigma = gallery::circle_sigma();
    for seed in 0..10 {
        let r = probe_openness(&spec, &sigma, 40, seed, GridSpec::new(GRID), None, &tol).unwrap();
        assert_eq!(r.transverse_fraction, 1.0, "seed {seed}");
        assert!(r.counterexample.is_none());
    }
}

#[test]
fn directed_probes_break_the_non_regular_fixtures() {
    let tol = Tolerances::default();
    let grid = GridSpec::new(GRID);
    // circle: the failure point leaves K
    let d = directed_probe(&hirsch_spec(0.1), &gallery::circle_sigma(), &gallery::hirsch_family(), grid, &tol).unwrap();
    let c = d.c.unwrap();
    assert!(c <= 0.025);
    let ce = d.counterexample.unwrap();
    assert!(ce.escapes_k && ce.margin.unwrap() <= 1e-9);
    // golubitsky axes: the failure point stays in K
    let spec = WeakNeighborhoodSpec::global(Arc::new(gallery::parabola()), BoxRegion::interval(-1.0, 1.0), 0.1).unwrap();
    let d = directed_probe(&spec, &gallery::golubitsky_sigma(), &gallery::golubitsky_family(), grid, &tol).unwrap();
    assert!(d.c.unwrap() <= 0.1);
    let ce = d.counterexample.unwrap();
    assert!(!ce.escapes_k && ce.stratum == "R+x0");
}
