//! Witness soundness on random linear faults and on the gallery faults.

use proptest::prelude::*;
use stratlab::error::Error;
use stratlab::gallery;
use stratlab::regularity::TangentSequence;
use stratlab::subspace::{intersect, sum};
use stratlab::transversality::margin_eta;
use stratlab::witness::{complex_witness, real_witness, FaultInstance, WitnessFamily, WitnessOptions};
use stratlab::{exact, DMatrix, DVector, DifferentiableMap, Stratum, Subspace, Tolerances};

#[derive(Debug, Clone)]
struct LinearFault {
    bx: DMatrix<f64>,
    by: DMatrix<f64>,
    u: Vec<f64>,
    r: usize,
    extra: usize,
}

fn linear_fault() -> impl Strategy<Value = LinearFault> {
    (2usize..=4, 1usize..=3, 1usize..=3, 1usize..=3, 0usize..=1)
        .prop_flat_map(|(n, a, b, r, extra)| {
            let (a, b, r) = (a.min(n - 1), b.min(n - 1), r.min(n - 1));
            let ints = |len| proptest::collection::vec((-2i32..=2).prop_map(f64::from), len);
            (Just((n, a, b, r, extra)), ints(n * a), ints(n * b), ints(b))
        })
        .prop_map(|((n, a, b, r, extra), ex, ey, u)| LinearFault {
            bx: DMatrix::from_column_slice(n, a, &ex),
            by: DMatrix::from_column_slice(n, b, &ey),
            u,
            r,
            extra,
        })
}

/// X and Y are linear; `y_k = (1/k) u` approaches the origin inside Y.
fn build(lf: &LinearFault, tol: &Tolerances) -> Option<FaultInstance> {
    let n = lf.bx.nrows();
    let x_sub = Subspace::from_spanning(&lf.bx);
    let y_sub = Subspace::from_spanning(&lf.by);
    if x_sub.dim() == 0 || y_sub.dim() == 0 || exact::contains(&lf.by, &lf.bx) {
        return None;
    }
    let u = &lf.by * DVector::from_column_slice(&lf.u);
    if u.norm() == 0.0 {
        return None;
    }
    let ys = Stratum::linear("Y", &y_sub, vec![]);
    let points = (1..=40).map(|k| &u / k as f64).collect();
    let seq = TangentSequence::from_points(&ys, points, DVector::zeros(n), tol).ok()?;
    Some(FaultInstance {
        x_stratum: Stratum::linear("X", &x_sub, vec![]),
        y_stratum: ys,
        x: DVector::zeros(n),
        seq,
        r: lf.r,
        m: n - lf.r + lf.extra,
        v: None,
    })
}

fn assert_sound(fam: &WitnessFamily, fault: &FaultInstance, tol: &Tolerances) -> Result<(), TestCaseError> {
    let rep = &fam.report;
    let n = rep.n;
    let m = rep.m;
    // decomposition splits the ambient space
    let parts = rep.decomposition.parts();
    prop_assert_eq!(rep.decomposition.dims().iter().sum::<usize>(), n);
    for i in 0..5 {
        for j in i + 1..5 {
            prop_assert_eq!(intersect(parts[i].1, parts[j].1).unwrap().dim(), 0, "{} and {}", parts[i].0, parts[j].0);
        }
    }
    // rank facts, recomputed
    prop_assert_eq!(sum(&rep.h.h, &rep.tangent_x).unwrap().dim(), n);
    prop_assert!(sum(&rep.h.h, &rep.tau).unwrap().dim() <= n - 1);
    prop_assert_eq!(rep.h.h.dim(), n - rep.r);
    prop_assert!(rep.verdict_x.transverse);
    let w = DVector::zeros(m);
    let f = fam.f.as_ref();
    let support = fam.bump.support();
    for (k, fk) in fam.members.iter().enumerate() {
        let yk = &fault.seq.points[k];
        prop_assert!((fk.eval(&w) - yk).amax() <= 1e-14 * (1.0 + yk.norm()));
        prop_assert!(margin_eta(fk.as_ref(), &w, &fault.y_stratum, tol).unwrap() <= 1e-10);
        // identical to f off the support
        for s in [3.0, -3.0] {
            let z = DVector::from_element(m, s * support.hi()[0].unwrap());
            prop_assert_eq!(fk.eval(&z), f.eval(&z));
        }
    }
    let c1: Vec<f64> = rep.members.iter().map(|r| r.c1_support).collect();
    for pair in c1[4..].windows(2) {
        prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-9) + 1e-15);
    }
    prop_assert!(c1[39] <= c1[0] / 20.0 + 1e-15);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn random_linear_faults_yield_sound_witnesses(lf in linear_fault()) {
        let tol = Tolerances::default();
        let Some(fault) = build(&lf, &tol) else { return Ok(()) };
        let opts = WitnessOptions { grid: stratlab::GridSpec::new(15), ..WitnessOptions::default() };
        match real_witness(&fault, &opts, &tol) {
            Ok(fam) => assert_sound(&fam, &fault, &tol)?,
            // r outside the sandwich range is reported, not forced
            Err(Error::InfeasibleH(_)) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}

#[test]
fn golubitsky_witness_is_sound() {
    let tol = Tolerances::default();
    let fault = gallery::golubitsky_fault(&tol).unwrap();
    let fam = real_witness(&fault, &WitnessOptions::default(), &tol).unwrap();
    let h = fam.report.h.h.basis();
    let e1 = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
    assert!(exact::contains(h, &e1) && exact::contains(&e1, h));
    assert_eq!(exact::sum_dim(h, fam.report.tangent_x.basis()), 2);
    assert_eq!(exact::sum_dim(h, fam.report.tau.basis()), 1);
    for (k, fk) in fam.members.iter().enumerate() {
        assert_eq!(fk.eval(&DVector::zeros(1)), DVector::from_vec(vec![1.0 / (k + 1) as f64, 0.0]));
        let c1 = fam.report.members[k].c1_plateau;
        assert!((c1 - 1.0 / (k + 1) as f64).abs() <= 1e-9, "k = {}: {c1}", k + 1);
    }
}

#[test]
fn complex_witness_is_sound() {
    let tol = Tolerances::default();
    let (fault, source) = gallery::complex_fault(&tol).unwrap();
    let w = complex_witness(&fault, &source, &WitnessOptions::default(), &tol).unwrap();
    let rep = &w.report;
    assert!(rep.verdict_x.transverse);
    assert_eq!(rep.h.h.dim(), 1);
    let e1 = DMatrix::from_row_slice(2, 1, &[stratlab::Complex64::new(1.0, 0.0), stratlab::Complex64::new(0.0, 0.0)]);
    assert!(exact::contains(rep.h.h.basis(), &e1));
    assert_eq!(rep.threshold_k, 1);
    for m in &rep.members {
        assert_eq!(m.y_k, vec![1.0 / m.k as f64, 0.0, 0.0, 0.0]);
        assert!(m.margin_y <= 1e-10 && !m.verdict_y.transverse);
    }
}
