//! Condition (a) on linear data: basis invariance, degenerate dimensions and the oracle.

use proptest::prelude::*;
use stratlab::regularity::{check_condition_a, AVerdict, TangentSequence};
use stratlab::strata::library::origin;
use stratlab::{exact, DMatrix, DVector, Stratum, Subspace, Tolerances};

#[derive(Debug, Clone)]
struct Pair {
    bx: DMatrix<f64>,
    by: DMatrix<f64>,
    u: Vec<f64>,
}

fn pair() -> impl Strategy<Value = Pair> {
    (2usize..=5, 1usize..=4, 1usize..=4, any::<bool>())
        .prop_flat_map(|(n, a, b, inside)| {
            let (a, b) = (a.min(n - 1), b.min(n));
            let ints = |len| proptest::collection::vec((-2i32..=2).prop_map(f64::from), len);
            (Just((n, a, b, inside)), ints(n * a), ints(n * b), ints(b), ints(b * a))
        })
        .prop_map(|((n, a, b, inside), ex, ey, u, mix)| {
            let by = DMatrix::from_column_slice(n, b, &ey);
            // half the cases put X inside Y so both verdicts occur
            let bx = if inside { &by * DMatrix::from_column_slice(b, a, &mix) } else { DMatrix::from_column_slice(n, a, &ex) };
            Pair { bx, by, u }
        })
}

fn approach(y: &Stratum, by: &DMatrix<f64>, u: &[f64], tol: &Tolerances) -> Option<TangentSequence> {
    let u = by * DVector::from_column_slice(u);
    if u.norm() == 0.0 {
        return None;
    }
    let points = (1..=20).map(|k| &u / k as f64).collect();
    TangentSequence::from_points(y, points, DVector::zeros(by.nrows()), tol).ok()
}

/// A different orthonormal basis of the same span.
fn rebased(s: &Subspace) -> Subspace {
    let k = s.dim();
    let order: Vec<usize> = (0..k).rev().collect();
    let u = DMatrix::from_fn(k, k, |i, j| if i <= j { 1.0 } else { 0.0 });
    Subspace::from_spanning(&(s.rebased(&order).basis() * u))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn verdict_matches_exact_containment_and_ignores_bases(p in pair()) {
        let tol = Tolerances::default();
        let xs = Subspace::from_spanning(&p.bx);
        let ysub = Subspace::from_spanning(&p.by);
        prop_assume!(xs.dim() > 0 && ysub.dim() > 0);
        let x_stratum = Stratum::linear("X", &xs, vec![]);
        let y_stratum = Stratum::linear("Y", &ysub, vec![]);
        let Some(seq) = approach(&y_stratum, &p.by, &p.u, &tol) else { return Ok(()) };
        let o = DVector::zeros(p.bx.nrows());
        let rep = check_condition_a(&x_stratum, &o, &seq, &tol).unwrap();
        prop_assert!(rep.converged);
        prop_assert_eq!(rep.holds, exact::contains(&p.by, &p.bx));

        let x2 = Stratum::linear("X", &rebased(&xs), vec![]);
        let y2 = Stratum::linear("Y", &rebased(&ysub), vec![]);
        let seq2 = approach(&y2, &p.by, &p.u, &tol).unwrap();
        let rep2 = check_condition_a(&x2, &o, &seq2, &tol).unwrap();
        prop_assert!((rep.containment_residual - rep2.containment_residual).abs() <= 1e-10);
        prop_assert_eq!(rep.verdict, rep2.verdict);
    }

    #[test]
    fn point_strata_always_hold(p in pair()) {
        let tol = Tolerances::default();
        let n = p.by.nrows();
        let ysub = Subspace::from_spanning(&p.by);
        prop_assume!(ysub.dim() > 0);
        let y = Stratum::linear("Y", &ysub, vec![]);
        let Some(seq) = approach(&y, &p.by, &p.u, &tol) else { return Ok(()) };
        let point = Stratum::linear("point", &Subspace::zero(n), vec![]);
        let rep = check_condition_a(&point, &DVector::zeros(n), &seq, &tol).unwrap();
        prop_assert!(rep.holds);
        if n == 2 {
            prop_assert!(check_condition_a(&origin(), &DVector::zeros(2), &seq, &tol).unwrap().holds);
        }
        prop_assert_eq!(rep.verdict, AVerdict::Certified);
    }

    #[test]
    fn open_strata_always_hold(p in pair()) {
        let tol = Tolerances::default();
        let n = p.bx.nrows();
        let xs = Subspace::from_spanning(&p.bx);
        prop_assume!(xs.dim() > 0);
        let open = Stratum::open("open", n, vec![]);
        let full = DMatrix::identity(n, n);
        let u: Vec<f64> = (0..n).map(|i| p.u.get(i).copied().unwrap_or(1.0) + 0.5).collect();
        let Some(seq) = approach(&open, &full, &u, &tol) else { return Ok(()) };
        let rep = check_condition_a(&Stratum::linear("X", &xs, vec![]), &DVector::zeros(n), &seq, &tol).unwrap();
        prop_assert!(rep.holds);
        prop_assert!(rep.containment_residual <= 1e-10);
    }
}
