//! Margin band, basis independence, monotonicity and oracle agreement.

use proptest::prelude::*;
use stratlab::agreement;
use stratlab::linalg::singular_values;
use stratlab::subspace::{hcat, spectral_norm, sum};
use stratlab::transversality::{block_rank, differential_scale, margin_from_differential, verdict_on_stratum};
use stratlab::{DMatrix, PolynomialMap, Reason, Stratum, Subspace, Tolerances};

fn entries(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-2.0f64..2.0, len)
}

/// `Df = low-rank + delta * noise` with `delta` spread over many decades, so
/// margins land on both sides of the rank threshold.
#[derive(Debug, Clone)]
struct Case {
    df: DMatrix<f64>,
    ts: DMatrix<f64>,
}

fn case() -> impl Strategy<Value = Case> {
    (2usize..=5, 1usize..=5, 0usize..=4, 0usize..=3)
        .prop_flat_map(|(n, m, s, k)| {
            let s = s.min(n - 1);
            let k = k.min(m);
            (
                Just((n, m, s, k)),
                entries(n * k),
                entries(k * m),
                entries(n * m),
                -15.0f64..0.0,
                entries(n * s),
            )
        })
        .prop_map(|((n, m, s, k), u, v, e, log_delta, t)| {
            let low = DMatrix::from_column_slice(n, k, &u) * DMatrix::from_column_slice(k, m, &v);
            let df = low + DMatrix::from_column_slice(n, m, &e) * 10f64.powf(log_delta);
            Case { df, ts: DMatrix::from_column_slice(n, s, &t) }
        })
}

fn random_orthogonal(k: usize, seed: &[f64]) -> DMatrix<f64> {
    let a = DMatrix::from_fn(k, k, |i, j| seed[(i * k + j) % seed.len()] + if i == j { 3.0 } else { 0.0 });
    a.qr().q()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 2000, failure_persistence: None, ..ProptestConfig::default() })]

    /// Scaled margin far above the tolerance means full rank, at or below it
    /// means deficient.
    #[test]
    fn margin_band(c in case()) {
        let tol = Tolerances::default();
        let ts = Subspace::from_spanning(&c.ts);
        let v = verdict_on_stratum(&c.df, &ts, "S", &tol);
        let eta = v.margin.unwrap() / differential_scale(&c.df);
        if eta > 10.0 * tol.rank {
            prop_assert_eq!(v.reason, Reason::RankFull);
        }
        if eta <= tol.rank {
            prop_assert_eq!(v.reason, Reason::RankDeficient);
        }
        // smallest singular value of the block sits in [eta/3, eta]
        let block = hcat(&c.df.unscale(differential_scale(&c.df)), ts.basis());
        let sv = singular_values(&block);
        let n = c.df.nrows();
        if eta.is_finite() && sv.len() >= n {
            let smin = sv[n - 1];
            prop_assert!(smin <= eta * (1.0 + 1e-9) + 1e-14);
            prop_assert!(smin >= eta / 3.0 * (1.0 - 1e-9) - 1e-14);
        }
    }

    /// Any orthonormal basis of the complement gives the same margin.
    #[test]
    fn margin_is_independent_of_the_complement_basis(c in case(), seed in entries(25)) {
        let ts = Subspace::from_spanning(&c.ts);
        let eta = margin_from_differential(&c.df, &ts);
        let q = ts.orthogonal_complement();
        let k = q.dim();
        prop_assume!(k > 0 && c.df.ncols() >= k);
        let q2 = q.basis() * random_orthogonal(k, &seed);
        let eta2 = singular_values(&(q2.transpose() * &c.df))[k - 1];
        prop_assert!((eta - eta2).abs() <= 1e-10 * (1.0 + spectral_norm(&c.df)));
    }

    /// Adding a direction to the stratum tangent never lowers the block rank.
    #[test]
    fn rank_is_monotone_in_the_tangent(c in case(), extra in entries(5)) {
        let tol = Tolerances::default();
        let n = c.df.nrows();
        let ts = Subspace::from_spanning(&c.ts);
        let bigger = sum(&ts, &Subspace::from_spanning(&DMatrix::from_column_slice(n, 1, &extra[..n]))).unwrap();
        let before = block_rank(&c.df, &ts, tol.rank);
        let after = block_rank(&c.df, &bigger, tol.rank);
        prop_assume!(before.conclusive && after.conclusive);
        prop_assert!(after.numeric_rank >= before.numeric_rank);
    }
}

#[test]
fn oracle_equivalence_on_random_linear_data() {
    let s = agreement::run(0, 100, &Tolerances::default()).unwrap();
    assert_eq!(s.instances, 100);
    assert!(s.inconclusive_rate < 0.05, "inconclusive rate {}", s.inconclusive_rate);
    assert!(s.disagreements.is_empty(), "{:#?}", s.disagreements);
    // both verdicts occur, so the comparison is not vacuous
    let kinds: std::collections::BTreeSet<&str> = s.records.iter().map(|r| r.transversality.exact.as_str()).collect();
    assert!(kinds.contains("on true") && kinds.contains("on false") && kinds.contains("off true"), "{kinds:?}");
}

#[test]
fn linear_stratum_verdicts_match_the_oracle_on_a_sweep() {
    // f(z) = (z, a z) against the line spanned by (1, b): transverse iff a != b
    let tol = Tolerances::default();
    for a in -3..=3 {
        for b in -3..=3 {
            let f = PolynomialMap::from_terms(1, &[&[(&[1], 1.0)], &[(&[1], a as f64)]]);
            let line = Subspace::from_spanning(&DMatrix::from_column_slice(2, 1, &[1.0, b as f64]));
            let s = Stratum::linear("line", &line, vec![]);
            let v = stratlab::transversality::is_transverse_at(&f, &stratlab::DVector::zeros(1), &s, &tol).unwrap();
            assert_eq!(v.transverse, a != b, "a = {a}, b = {b}");
        }
    }
}
