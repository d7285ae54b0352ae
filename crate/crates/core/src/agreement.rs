//! Floating path against the rational oracle on random small-integer linear data.
//!
//! Each seed yields an affine map, a linear stratum cut out by integer
//! equations, and a pair `(T_x X, tau)` of spanned subspaces. Three families of
//! decisions are compared: pointwise transversality, containment of the two
//! subspaces, and the rank facts of the `H` construction.

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::Error;
use crate::exact;
use crate::geometry::PolynomialMap;
use crate::strata::Stratum;
use crate::subspace::{self, hcat, numeric_rank, Subspace};
use crate::tolerances::Tolerances;
use crate::transversality::{is_transverse_at, Reason};
use crate::witness::{construct_h, decompose, fault_direction};

type Q = BigRational;
type Cols = Vec<Vec<Q>>;

/// One random instance; all entries are small integers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearInstance {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    /// `f(z) = a z + b`.
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub x0: DVector<f64>,
    /// The stratum is `ker g`.
    pub g: DMatrix<f64>,
    pub tx: DMatrix<f64>,
    pub tau: DMatrix<f64>,
    pub r: usize,
}

fn int_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: i32) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..=bound) as f64)
}

/// Integer matrix of rank at most `k`, as a product of two integer factors.
fn low_rank(rng: &mut ChaCha8Rng, rows: usize, cols: usize, k: usize) -> DMatrix<f64> {
    int_matrix(rng, rows, k, 2) * int_matrix(rng, k, cols, 2)
}

impl LinearInstance {
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=5);
        let m = rng.random_range(1..=n);
        let c = rng.random_range(1..n);
        let g = loop {
            let g = int_matrix(&mut rng, c, n, 2);
            if exact::matrix_rank(&g) == c {
                break g;
            }
        };
        let a = if rng.random_bool(0.5) {
            let k = rng.random_range(0..=m.min(c));
            low_rank(&mut rng, n, m, k)
        } else {
            int_matrix(&mut rng, n, m, 2)
        };
        let x0 = DVector::from_fn(m, |_, _| rng.random_range(-2..=2) as f64);
        // the image lands on ker g unless a component outside it is added
        let mut b = -(&a * &x0);
        if rng.random_bool(0.2) {
            b += DVector::from_fn(n, |_, _| rng.random_range(-1..=1) as f64);
        }
        let dx = rng.random_range(1..n);
        let dt = rng.random_range(1..n);
        let tau = if rng.random_bool(0.3) {
            let k = rng.random_range(1..=dt);
            low_rank(&mut rng, n, dt, k)
        } else {
            int_matrix(&mut rng, n, dt, 2)
        };
        let tx = match rng.random_range(0..3) {
            // inside tau: containment holds and the pair is not a fault
            0 => &tau * int_matrix(&mut rng, dt, dx, 2),
            // shares directions with tau
            1 => {
                let mut t = int_matrix(&mut rng, n, dx, 2);
                let shared = &tau * int_matrix(&mut rng, dt, 1, 1);
                t.set_column(0, &shared.column(0));
                t
            }
            _ => int_matrix(&mut rng, n, dx, 2),
        };
        let r = rng.random_range(0..n);
        Self { seed, n, m, a, b, x0, g, tx, tau, r }
    }

    pub fn map(&self) -> PolynomialMap {
        PolynomialMap::affine(&self.a, &self.b)
    }

    pub fn stratum(&self) -> Stratum {
        let g = PolynomialMap::affine(&self.g, &DVector::zeros(self.g.nrows()));
        Stratum::implicit("ker g", Arc::new(g), vec![])
    }
}

/// A float decision next to the exact one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub float: String,
    pub exact: String,
    pub agree: bool,
}

impl Comparison {
    fn new(float: String, exact: String) -> Self {
        let agree = float == exact;
        Self { float, exact, agree }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementRecord {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    /// Every floating rank decision behind the three comparisons was conclusive.
    pub conclusive: bool,
    pub transversality: Comparison,
    pub containment: Comparison,
    pub h_facts: Comparison,
}

impl AgreementRecord {
    pub fn agrees(&self) -> bool {
        self.transversality.agree && self.containment.agree && self.h_facts.agree
    }
}

// ---------------------------------------------------------------------------
// Exact side

fn q(x: f64) -> Q {
    Q::from_float(x).expect("finite")
}

fn cols(m: &DMatrix<f64>) -> Cols {
    m.column_iter().map(|c| c.iter().map(|&x| q(x)).collect()).collect()
}

fn as_rows(c: &Cols, n: usize) -> exact::Matrix<Q> {
    (0..n).map(|r| c.iter().map(|v| v[r].clone()).collect()).collect()
}

fn dim(c: &Cols, n: usize) -> usize {
    if c.is_empty() {
        0
    } else {
        exact::rank(&as_rows(c, n))
    }
}

/// Linearly independent subset spanning the same space.
fn basis(c: &Cols, n: usize) -> Cols {
    let mut out: Cols = Vec::new();
    for v in c {
        let mut trial = out.clone();
        trial.push(v.clone());
        if dim(&trial, n) == trial.len() {
            out = trial;
        }
    }
    out
}

fn perp(c: &Cols, n: usize) -> Cols {
    if c.is_empty() {
        return (0..n)
            .map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
            .collect();
    }
    exact::nullspace(c, n)
}

fn meet(a: &Cols, b: &Cols, n: usize) -> Cols {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let stacked: Cols = a.iter().chain(b).cloned().collect();
    let null = exact::nullspace(&as_rows(&stacked, n), stacked.len());
    let images: Cols = null
        .iter()
        .map(|x| (0..n).map(|r| a.iter().zip(x).fold(Q::zero(), |acc, (v, c)| acc + v[r].clone() * c)).collect())
        .collect();
    basis(&images, n)
}

fn join(a: &Cols, b: &Cols) -> Cols {
    a.iter().chain(b).cloned().collect()
}

/// `(dims [E, W1, W2, T1, T2], dim(H + T_x X), dim(H + tau))` by rational
/// elimination, or the reason the construction cannot start.
fn exact_h_facts(tx: &DMatrix<f64>, tau: &DMatrix<f64>, r: usize) -> String {
    let n = tx.nrows();
    let (tx, tau) = (basis(&cols(tx), n), basis(&cols(tau), n));
    let Some(v) = tx.iter().find(|v| dim(&join(&tau, &vec![(*v).clone()]), n) > tau.len()) else {
        return "NotAFault".into();
    };
    let e = vec![v.clone()];
    let t1 = meet(&tx, &tau, n);
    let w1 = meet(&tx, &perp(&join(&e, &t1), n), n);
    let t2 = meet(&tau, &perp(&t1, n), n);
    let w2 = basis(&perp(&join(&tx, &tau), n), n);
    let Some(target) = n.checked_sub(r) else {
        return "DimensionHypothesisViolated".into();
    };
    let floor = t2.len() + w2.len();
    if target < floor || target > floor + t1.len() + w1.len() {
        return "InfeasibleH".into();
    }
    let take_t1 = (target - floor).min(t1.len());
    let take_w1 = target - floor - take_t1;
    let h: Cols = t1[..take_t1]
        .iter()
        .chain(&t2)
        .chain(&w1[..take_w1])
        .chain(&w2)
        .cloned()
        .collect();
    let dims = [e.len(), w1.len(), w2.len(), t1.len(), t2.len()];
    format!("{dims:?} {} {}", dim(&join(&h, &tx), n), dim(&join(&h, &tau), n))
}

// ---------------------------------------------------------------------------
// Floating side

fn float_h_facts(tx: &Subspace, tau: &Subspace, r: usize, tol: &Tolerances) -> String {
    let run = || -> crate::Result<String> {
        let v = fault_direction(tx, tau, tol.a)?;
        let d = decompose(tx, tau, &v, tol)?;
        let h = construct_h(&d, tx, tau, r, tol)?;
        Ok(format!("{:?} {} {}", d.dims(), h.dim_h_plus_tx, h.dim_h_plus_tau))
    };
    match run() {
        Ok(s) => s,
        Err(e) => crate::gallery::error_kind(&e).into(),
    }
}

fn conclusive(m: &DMatrix<f64>, tol: &Tolerances) -> bool {
    m.ncols() == 0 || numeric_rank(m, tol.rank).conclusive
}

pub fn compare(inst: &LinearInstance, tol: &Tolerances) -> crate::Result<AgreementRecord> {
    let f = inst.map();
    let s = inst.stratum();
    let verdict = is_transverse_at(&f, &inst.x0, &s, tol)?;
    let xe: Vec<Q> = inst.x0.iter().map(|&x| q(x)).collect();
    let ev = exact::transverse_at(&f, &xe, &s)
        .ok_or_else(|| Error::InvalidOperands(format!("seed {}: exact path not applicable", inst.seed)))?;
    let label = |on: bool, t: bool| format!("{} {}", if on { "on" } else { "off" }, t);
    let transversality = Comparison::new(
        label(verdict.reason != Reason::MissesStratum, verdict.transverse),
        label(ev.on_stratum, ev.transverse),
    );

    let tx = Subspace::from_spanning_tol(&inst.tx, tol.rank);
    let tau = Subspace::from_spanning_tol(&inst.tau, tol.rank);
    let both = |a: bool, b: bool| format!("tau>=tx {a}, tx>=tau {b}");
    let containment = Comparison::new(
        both(subspace::contains(&tau, &tx, tol.grass)?, subspace::contains(&tx, &tau, tol.grass)?),
        both(exact::contains(&inst.tau, &inst.tx), exact::contains(&inst.tx, &inst.tau)),
    );
    let h_facts = Comparison::new(float_h_facts(&tx, &tau, inst.r, tol), exact_h_facts(&inst.tx, &inst.tau, inst.r));

    let all_conclusive = verdict.rank_decision.is_none_or(|d| d.conclusive)
        && conclusive(&inst.tx, tol)
        && conclusive(&inst.tau, tol)
        && conclusive(&hcat(&inst.tx, &inst.tau), tol);
    Ok(AgreementRecord {
        seed: inst.seed,
        n: inst.n,
        m: inst.m,
        conclusive: all_conclusive,
        transversality,
        containment,
        h_facts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementSummary {
    pub instances: usize,
    pub conclusive: usize,
    pub inconclusive_rate: f64,
    /// Conclusive instances on which some decision differs.
    pub disagreements: Vec<AgreementRecord>,
    pub records: Vec<AgreementRecord>,
}

/// Compares seeds `first..first + count` in parallel.
pub fn run(first: u64, count: u64, tol: &Tolerances) -> crate::Result<AgreementSummary> {
    let records: Vec<AgreementRecord> = (first..first + count)
        .into_par_iter()
        .map(|s| compare(&LinearInstance::random(s), tol))
        .collect::<crate::Result<_>>()?;
    let conclusive = records.iter().filter(|r| r.conclusive).count();
    let disagreements = records.iter().filter(|r| r.conclusive && !r.agrees()).cloned().collect();
    Ok(AgreementSummary {
        instances: records.len(),
        conclusive,
        inconclusive_rate: 1.0 - conclusive as f64 / records.len().max(1) as f64,
        disagreements,
        records,
    })
}
