//! Built-in fixtures: the classical examples and counterexamples, each with
//! the outcomes it must reproduce.
//!
//! Every fixture runs its computations and compares them against values
//! worked out by hand (closed forms, exact rational arithmetic). A run yields
//! one [`Expectation`] per comparison; a fixture passes when all of them do.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact;
use crate::geometry::{AffineMap, BoxRegion, DifferentiableMap, GridSpec, MapRef, PolynomialMap};
use crate::neighborhoods::{directed_probe, nbhd_contains, probe_openness, DirectedFamily, WeakNeighborhoodSpec};
use crate::regularity::{
    check_condition_a, oscillation, scan_pairs, sequence_from_curve, Approach, AVerdict, Schedule,
};
use crate::scalar::Scalar;
use crate::strata::library::*;
use crate::strata::{validate, RegionConstraint, Relation, Stratification, Stratum};
use crate::subspace::{subspace_distance, Subspace};
use crate::tolerances::Tolerances;
use crate::transversality::{
    codim_shortcut_applies, is_transverse_at, is_transverse_to_stratification, margin_eta, transverse_on_compact,
};
use crate::witness::{
    analyze_fault, complex_witness, complex_witness_any, real_witness, AnyFault, ComplexSource, FaultInstance,
    WitnessOptions,
};

/// Grid used for random openness probes inside fixtures.
pub const PROBE_GRID: usize = 101;
pub const PROBE_SAMPLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GalleryOptions {
    pub tol: Tolerances,
    pub grid: GridSpec,
    pub seed: u64,
}

impl Default for GalleryOptions {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            grid: GridSpec::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub check: String,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureReport {
    pub name: String,
    pub summary: String,
    pub provenance: String,
    pub passed: bool,
    pub expectations: Vec<Expectation>,
}

impl FixtureReport {
    pub fn misses(&self) -> impl Iterator<Item = &Expectation> {
        self.expectations.iter().filter(|e| !e.pass)
    }
}

#[derive(Clone, Copy)]
pub struct Fixture {
    pub name: &'static str,
    pub summary: &'static str,
    pub provenance: &'static str,
    run: fn(&GalleryOptions, &mut Checks),
}

impl std::fmt::Debug for Fixture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fixture({})", self.name)
    }
}

impl Fixture {
    pub fn run(&self, opts: &GalleryOptions) -> FixtureReport {
        let mut checks = Checks::default();
        (self.run)(opts, &mut checks);
        let passed = !checks.0.is_empty() && checks.0.iter().all(|e| e.pass);
        FixtureReport {
            name: self.name.into(),
            summary: self.summary.into(),
            provenance: self.provenance.into(),
            passed,
            expectations: checks.0,
        }
    }
}

/// Collects expectation records.
#[derive(Debug, Default)]
pub struct Checks(Vec<Expectation>);

impl Checks {
    fn push(&mut self, check: impl Into<String>, expected: String, observed: String, pass: bool) {
        self.0.push(Expectation {
            check: check.into(),
            expected,
            observed,
            pass,
        });
    }

    fn truth(&mut self, check: impl Into<String>, expected: bool, observed: bool) {
        self.push(check, expected.to_string(), observed.to_string(), expected == observed);
    }

    fn close(&mut self, check: impl Into<String>, expected: f64, observed: f64, tol: f64) {
        let pass = (expected - observed).abs() <= tol;
        self.push(check, format!("{expected:.12e} ± {tol:.1e}"), format!("{observed:.12e}"), pass);
    }

    fn at_most(&mut self, check: impl Into<String>, bound: f64, observed: f64) {
        self.push(check, format!("<= {bound:.6e}"), format!("{observed:.12e}"), observed <= bound);
    }

    fn at_least(&mut self, check: impl Into<String>, bound: f64, observed: f64) {
        self.push(check, format!(">= {bound:.6e}"), format!("{observed:.12e}"), observed >= bound);
    }

    fn text(&mut self, check: impl Into<String>, expected: &str, observed: &str) {
        self.push(check, expected.into(), observed.into(), expected == observed);
    }

    /// Records an error as a miss and yields the value otherwise.
    fn ok<T>(&mut self, check: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(check, "success".into(), format!("error: {e}"), false);
                None
            }
        }
    }

    fn error_kind<T: std::fmt::Debug>(&mut self, check: &str, expected: &str, r: Result<T>) {
        let observed = match r {
            Ok(v) => format!("Ok({v:?})").chars().take(80).collect(),
            Err(e) => error_kind(&e).to_string(),
        };
        self.text(check, expected, &observed);
    }
}

pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidOperands(_) => "InvalidOperands",
        Error::DimensionMismatch(_) => "DimensionMismatch",
        Error::NotContained { .. } => "NotContained",
        Error::ChartMismatch { .. } => "ChartMismatch",
        Error::DomainEscape { .. } => "DomainEscape",
        Error::Inconclusive(_) => "Inconclusive",
        Error::SingularPoint { .. } => "SingularPoint",
        Error::NotOnStratum(_) => "NotOnStratum",
        Error::InfeasibleH(_) => "InfeasibleH",
        Error::NotAFault(_) => "NotAFault",
        Error::DimensionHypothesisViolated(_) => "DimensionHypothesisViolated",
        Error::AlignmentFailure(_) => "AlignmentFailure",
        Error::ConstructionContradiction(_) => "ConstructionContradiction",
        Error::NonComplexSubspace(_) => "NonComplexSubspace",
        Error::SamplingFailure(_) => "SamplingFailure",
        Error::NoncompactSet(_) => "NoncompactSet",
        Error::Malformed(_) => "Malformed",
    }
}

fn p(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

fn tol_for(opts: &GalleryOptions) -> &Tolerances {
    &opts.tol
}

// ---------------------------------------------------------------------------
// Shared data

/// `f(x) = (x, x^2 + 1)`.
pub fn hirsch_map() -> PolynomialMap {
    PolynomialMap::from_terms(1, &[&[(&[1], 1.0)], &[(&[2], 1.0), (&[0], 1.0)]])
}

/// `g_c(x) = f(x - c) = (x - c, x^2 - 2 c x + c^2 + 1)`, kept polynomial for the oracle.
pub fn hirsch_shift(c: f64) -> PolynomialMap {
    PolynomialMap::from_terms(
        1,
        &[
            &[(&[1], 1.0), (&[0], -c)],
            &[(&[2], 1.0), (&[1], -2.0 * c), (&[0], c * c + 1.0)],
        ],
    )
}

pub fn hirsch_family() -> DirectedFamily {
    DirectedFamily::new("g_c(x) = (x - c, (x - c)^2 + 1)", |c| Arc::new(hirsch_shift(c)) as MapRef)
        .with_failure_point(|c| DVector::from_element(1, c))
}

pub fn hirsch_k() -> BoxRegion {
    BoxRegion::interval(0.5, 2.0)
}

pub fn circle_sigma() -> Stratification {
    Stratification::new("circle", 2, vec![circle()]).expect("valid")
}

pub fn hirsch_spec(epsilon: f64) -> WeakNeighborhoodSpec {
    WeakNeighborhoodSpec::global(Arc::new(hirsch_map()), hirsch_k(), epsilon).expect("valid spec")
}

/// Closed-form clearance of `f(K)` from the circle: `|f(x)| - 1` is increasing.
pub fn hirsch_clearance_exact() -> f64 {
    (0.25f64 + 1.25 * 1.25).sqrt() - 1.0
}

/// Exact sup-distance between `g_c` and `f` on `K = [0.5, 2]` with first
/// derivatives: `max(c, 4c - c^2, 2c)`.
pub fn hirsch_c1_distance(c: f64) -> f64 {
    c.max(4.0 * c - c * c).max(2.0 * c)
}

/// `f(x) = (x, x^2)`.
pub fn parabola() -> PolynomialMap {
    PolynomialMap::from_terms(1, &[&[(&[1], 1.0)], &[(&[2], 1.0)]])
}

/// `(x, (x - c)^2)`: touches `R+ x 0` at its vertex.
pub fn shifted_parabola(c: f64) -> PolynomialMap {
    PolynomialMap::from_terms(1, &[&[(&[1], 1.0)], &[(&[2], 1.0), (&[1], -2.0 * c), (&[0], c * c)]])
}

/// `{R+ x 0, 0 x R}`.
pub fn golubitsky_sigma() -> Stratification {
    let mut s = Stratification::new("golubitsky axes", 2, vec![positive_x_axis(), y_axis()]).expect("valid");
    s.union_closed = false;
    s.declared_a_regular = Some(false);
    s
}

/// `t -> (t, 0)`.
pub fn positive_ray() -> AffineMap {
    AffineMap::linear(DMatrix::from_row_slice(2, 1, &[1.0, 0.0]))
}

/// `y_k = (1/k, 0)`, `k = 1..=40`.
pub fn harmonic_schedule() -> Schedule {
    Schedule::explicit(|k| 1.0 / k as f64, 1..=40)
}

/// `X = 0 x R` at the origin, approached from `R+ x 0` along `(1/k, 0)`; `m = 1`.
pub fn golubitsky_fault(tol: &Tolerances) -> Result<FaultInstance> {
    let o = p(&[0.0, 0.0]);
    let seq = sequence_from_curve(&positive_x_axis(), &positive_ray(), &o, &harmonic_schedule(), tol)?;
    FaultInstance::from_stratification(&golubitsky_sigma(), "0xR", "R+x0", o, seq, 1)
}

/// `g_c(x) = f(x) + (c, 0)`: moves the vertex onto `R+ x 0`.
pub fn golubitsky_family() -> DirectedFamily {
    DirectedFamily::new("g_c(x) = (x + c, x^2)", |c| {
        Arc::new(PolynomialMap::from_terms(1, &[&[(&[1], 1.0), (&[0], c)], &[(&[2], 1.0)]])) as MapRef
    })
    .with_failure_point(|_| DVector::from_element(1, 0.0))
}

fn complex_coordinate(axis: usize) -> PolynomialMap<Complex64> {
    let mut e = vec![0u32; 2];
    e[axis] = 1;
    PolynomialMap::<Complex64>::from_terms(2, &[&[(&e, Complex64::new(1.0, 0.0))]])
}

/// `{C* x 0, 0 x C}` in `C^2`.
pub fn complex_axes_sigma() -> Stratification<Complex64> {
    let xs = Stratum::implicit("0xC", Arc::new(complex_coordinate(0)), Vec::new());
    let ys = Stratum::implicit(
        "C*x0",
        Arc::new(complex_coordinate(1)),
        vec![RegionConstraint::new(complex_coordinate(0), Relation::Ne)],
    );
    let mut s = Stratification::new("complex axes", 2, vec![ys, xs]).expect("valid");
    s.union_closed = false;
    s.declared_a_regular = Some(false);
    s
}

/// The complex analogue of [`golubitsky_fault`] with source `M = C`.
pub fn complex_fault(tol: &Tolerances) -> Result<(FaultInstance<Complex64>, ComplexSource)> {
    let one = Complex64::new(1.0, 0.0);
    let ray = AffineMap::<Complex64>::linear(DMatrix::from_row_slice(2, 1, &[one, Complex64::new(0.0, 0.0)]));
    let o = DVector::<Complex64>::zeros(2);
    let sigma = complex_axes_sigma();
    let ys = sigma.stratum("C*x0").expect("present").clone();
    let seq = sequence_from_curve(&ys, &ray, &o, &harmonic_schedule(), tol)?;
    let fault = FaultInstance::from_stratification(&sigma, "0xC", "C*x0", o, seq, 1)?;
    Ok((fault, ComplexSource::new(Subspace::full(1))))
}

/// `{R x 0, (t, t^2 sin(1/t))}`.
pub fn oscillation_sigma() -> Stratification {
    let mut s = Stratification::new("oscillation", 2, vec![x_axis(), oscillating_curve()]).expect("valid");
    s.union_closed = false;
    s
}

/// Alternates between phases `0.1` and `pi + 0.1` of `1/t`, so the slopes
/// alternate near `-1` and `+1`.
pub fn oscillation_mixed() -> Schedule {
    Schedule::explicit(
        |k| 1.0 / (2.0 * PI * k as f64 + if k % 2 == 0 { 0.1 } else { PI + 0.1 }),
        1..=40,
    )
}

/// `{R+ x 0, R- x 0, origin}`: two non-closed strata with closed union.
pub fn nonclosed_union_sigma() -> Stratification {
    Stratification::new("nonclosed union", 2, vec![positive_x_axis(), negative_x_axis(), origin()]).expect("valid")
}

/// `{open upper half-plane, R x 0}`.
pub fn top_dimensional_sigma() -> Stratification {
    let mut s = Stratification::new("upper half-plane over the x-axis", 2, vec![upper_half_plane(), x_axis()])
        .expect("valid");
    s.union_closed = false;
    s
}

/// Floating verdict and exact verdict for polynomial data; `None` when the
/// exact path does not apply.
pub fn oracle_pair<T: Scalar>(
    f: &PolynomialMap<T>,
    x: &DVector<T>,
    s: &Stratum<T>,
    tol: &Tolerances,
) -> Result<(bool, Option<exact::ExactVerdict>)> {
    let float = is_transverse_at(f, x, s, tol)?;
    let xe: Vec<T::Exact> = x.iter().map(|c| c.to_exact()).collect();
    Ok((float.transverse, exact::transverse_at(f, &xe, s)))
}

fn oracle_check<T: Scalar>(c: &mut Checks, label: &str, f: &PolynomialMap<T>, x: &DVector<T>, s: &Stratum<T>, tol: &Tolerances) {
    if let Some((float, ex)) = c.ok(label, oracle_pair(f, x, s, tol)) {
        match ex {
            Some(e) => c.truth(label, e.transverse, float),
            None => c.push(label, "exact verdict".into(), "not applicable".into(), false),
        }
    }
}

// ---------------------------------------------------------------------------
// Fixtures

pub fn hirsch_circle() -> Fixture {
    Fixture {
        name: "hirsch_circle",
        summary: "f(x) = (x, x^2 + 1) against the unit circle; the shifts g_c touch it at x = c",
        provenance: "classical weak-topology counterexample; clearance and distances by closed form",
        run: run_hirsch,
    }
}

fn run_hirsch(o: &GalleryOptions, c: &mut Checks) {
    let tol = tol_for(o);
    let f = hirsch_map();
    let sigma = circle_sigma();
    let s = circle();

    if let Some(r) = c.ok("f on M", transverse_on_compact(&f, &BoxRegion::interval(0.01, 10.0), &sigma, o.grid, tol)) {
        c.truth("f transverse on sampled M = [0.01, 10]", true, r.transverse && r.failures.is_empty());
    }
    if let Some(r) = c.ok("f on K", transverse_on_compact(&f, &hirsch_k(), &sigma, o.grid, tol)) {
        let cl = r.min_clearance.unwrap_or(f64::NAN);
        c.at_least("clearance on K", 0.3, cl);
        c.close("clearance on K (closed form)", hirsch_clearance_exact(), cl, 1e-6);
    }
    if let Some(v) = c.ok("f at 0.7", is_transverse_at(&f, &p(&[0.7]), &s, tol)) {
        c.text("f at x = 0.7", "MissesStratum", &format!("{:?}", v.reason));
    }
    let g = hirsch_shift(0.5);
    if let Some(v) = c.ok("g_0.5", is_transverse_at(&g, &p(&[0.5]), &s, tol)) {
        c.text("g_0.5 at x = 0.5", "RankDeficient", &format!("{:?}", v.reason));
    }
    for cc in [0.01, 0.1, 0.5, 1.0, 2.0] {
        let g = hirsch_shift(cc);
        if let Some(m) = c.ok("g_c margin", margin_eta(&g, &p(&[cc]), &s, tol)) {
            c.at_most(format!("margin of g_{cc} at x = {cc}"), 1e-12, m);
        }
    }
    oracle_check(c, "oracle agrees: g_0.5 at 0.5", &g, &p(&[0.5]), &s, tol);
    oracle_check(c, "oracle agrees: f at 0", &f, &p(&[0.0]), &s, tol);
    c.truth("codimension shortcut (m = 1)", false, codim_shortcut_applies(&sigma, 1));

    let spec = hirsch_spec(0.1);
    for (cc, expect) in [(0.01, true), (1.0, false)] {
        let g = hirsch_shift(cc);
        c.truth(format!("g_{cc} in N(f, K, 0.1)"), expect, nbhd_contains(&spec, &g, o.grid));
        c.close(format!("C1 distance of g_{cc}"), hirsch_c1_distance(cc), spec.distance(&g, o.grid), 1e-9);
    }
    if let Some(d) = c.ok("directed probe", directed_probe(&spec, &sigma, &hirsch_family(), o.grid, tol)) {
        let found = d.c.unwrap_or(f64::NAN);
        c.at_most("directed probe c", 0.025, found);
        c.close("membership boundary 2 - sqrt(3.9)", 2.0 - 3.9f64.sqrt(), d.boundary_c.unwrap_or(f64::NAN), 1e-9);
        match &d.counterexample {
            Some(ce) => {
                c.at_most("margin of g_c at x = c", 1e-9, ce.margin.unwrap_or(f64::NAN));
                c.truth("failure escapes K", true, ce.escapes_k);
                c.close("failure point", found, ce.point[0], 1e-15);
            }
            None => c.push("directed counterexample", "present".into(), "absent".into(), false),
        }
    }
    let eps = 0.05f64.min(hirsch_clearance_exact() / 2.0);
    let spec = hirsch_spec(eps);
    if let Some(r) = c.ok(
        "random probe",
        probe_openness(&spec, &sigma, PROBE_SAMPLES, o.seed, GridSpec::new(PROBE_GRID), None, tol),
    ) {
        c.close("transverse fraction of random members", 1.0, r.transverse_fraction, 0.0);
        c.truth("no random counterexample", true, r.counterexample.is_none());
    }
    if let Some(r) = c.ok("circle-only scan", scan_pairs(&sigma, &[], tol)) {
        c.truth("circle-only stratification vacuously a-regular", true, r.certified_a_regular && r.pairs.is_empty());
    }
}

pub fn golubitsky_axes() -> Fixture {
    Fixture {
        name: "golubitsky_axes",
        summary: "f(x) = (x, x^2) against {R+ x 0, 0 x R}; (a) fails at the origin and the witness family is built",
        provenance: "classical non-(a)-regular pair; witness values by hand linear algebra and exact arithmetic",
        run: run_golubitsky,
    }
}

fn run_golubitsky(o: &GalleryOptions, c: &mut Checks) {
    let tol = tol_for(o);
    let f = parabola();
    let sigma = golubitsky_sigma();
    let x0 = p(&[0.0]);
    if let Some(v) = c.ok("f at 0", is_transverse_to_stratification(&f, &x0, &sigma, tol)) {
        let reasons: Vec<String> = v.verdicts.iter().map(|v| format!("{}: {:?}", v.stratum, v.reason)).collect();
        c.text("f at 0 per stratum", "R+x0: MissesStratum, 0xR: RankFull", &reasons.join(", "));
        c.truth("f at 0 transverse to the stratification", true, v.transverse);
    }
    if let Some(m) = c.ok("margin f", margin_eta(&f, &x0, &y_axis(), tol)) {
        c.close("margin of f at 0 against 0xR", 1.0, m, 1e-12);
    }
    if let Some(r) = c.ok("f on [-1, 1]", transverse_on_compact(&f, &BoxRegion::interval(-1.0, 1.0), &sigma, o.grid, tol)) {
        c.truth("f transverse on [-1, 1]", true, r.transverse);
        c.close("min margin on [-1, 1]", 1.0, r.min_margin.unwrap_or(f64::NAN), 1e-12);
    }
    let sp = shifted_parabola(0.5);
    if let Some(v) = c.ok("shifted parabola", is_transverse_at(&sp, &p(&[0.5]), &positive_x_axis(), tol)) {
        c.text("(x, (x - 1/2)^2) at its vertex", "RankDeficient", &format!("{:?}", v.reason));
        c.at_most("margin at the vertex", 1e-12, v.margin.unwrap_or(f64::NAN));
    }
    oracle_check(c, "oracle agrees: f at 0 vs 0xR", &f, &x0, &y_axis(), tol);
    oracle_check(c, "oracle agrees: f at 0 vs R+x0", &f, &x0, &positive_x_axis(), tol);
    oracle_check(c, "oracle agrees: shifted parabola", &sp, &p(&[0.5]), &positive_x_axis(), tol);
    c.truth("codimension shortcut (m = 1)", false, codim_shortcut_applies(&sigma, 1));

    let origin2 = p(&[0.0, 0.0]);
    if let Some(seq) = c.ok(
        "sequence",
        sequence_from_curve(&positive_x_axis(), &positive_ray(), &origin2, &harmonic_schedule(), tol),
    ) {
        if let Some(rep) = c.ok("condition (a)", check_condition_a(&y_axis(), &origin2, &seq, tol)) {
            c.text("condition (a) of (0xR, R+x0) at 0", "Refuted", &format!("{:?}", rep.verdict));
            c.close("containment residual", 1.0, rep.containment_residual, 1e-6);
        }
    }
    let approach = Approach {
        x_stratum: "0xR".into(),
        y_stratum: "R+x0".into(),
        x: origin2.clone(),
        curve: Arc::new(positive_ray()),
        schedule: harmonic_schedule(),
    };
    if let Some(scan) = c.ok("scan", scan_pairs(&sigma, &[approach], tol)) {
        c.truth("stratification certified a-regular", false, scan.certified_a_regular);
        let failing: Vec<String> = scan
            .pairs
            .iter()
            .filter(|p| !p.certified_on_approaches())
            .map(|p| format!("{} under {}", p.x_stratum, p.y_stratum))
            .collect();
        c.text("failing pair", "0xR under R+x0", &failing.join("; "));
    }

    let Some(fault) = c.ok("fault", golubitsky_fault(tol)) else { return };
    if let Some(fam) = c.ok("witness", real_witness(&fault, &WitnessOptions::default(), tol)) {
        let rep = &fam.report;
        let h = rep.h.h.basis();
        let e1 = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        c.truth("H = span{(1,0)} (exact)", true, exact::contains(h, &e1) && exact::contains(&e1, h));
        let tx = rep.tangent_x.basis();
        let tau = rep.tau.basis();
        c.text("dim(H + T_xX), dim(H + tau) (exact)", "2, 1", &format!("{}, {}", exact::sum_dim(h, tx), exact::sum_dim(h, tau)));
        c.text("decomposition dims [E, W1, W2, T1, T2]", "[1, 0, 0, 0, 1]", &format!("{:?}", rep.decomposition.dims()));
        c.text("f at w against X", "RankFull", &format!("{:?}", rep.verdict_x.reason));
        c.text("f at w against Y", "MissesStratum", &format!("{:?}", rep.verdict_y.reason));
        let w = p(&[0.0]);
        let exact_values = fam
            .members
            .iter()
            .enumerate()
            .all(|(k, fk)| fk.eval(&w) == p(&[1.0 / (k + 1) as f64, 0.0]));
        c.truth("f^k(0) = (1/k, 0) exactly, k = 1..40", true, exact_values);
        let worst_margin = rep.members.iter().map(|m| m.margin_y).fold(0.0, f64::max);
        c.at_most("max_k margin of f^k at 0 against Y", 1e-10, worst_margin);
        let worst_c1 = rep
            .members
            .iter()
            .map(|m| (m.c1_plateau - 1.0 / m.k as f64).abs())
            .fold(0.0, f64::max);
        c.at_most("max_k |c1_distance(f^k, f, K) - 1/k|", 1e-9, worst_c1);
        c.truth("f^k not transverse to Y for every k", true, rep.threshold_k == 1);
        let monotone = rep.members[4..].windows(2).all(|w| w[1].c1_support <= w[0].c1_support);
        c.truth("C1 distance on the support nonincreasing past k = 5", true, monotone);
    }

    let spec = WeakNeighborhoodSpec::global(Arc::new(f), BoxRegion::interval(-1.0, 1.0), 0.1).expect("valid");
    if let Some(d) = c.ok("directed probe", directed_probe(&spec, &sigma, &golubitsky_family(), o.grid, tol)) {
        c.at_most("directed probe c", 0.1, d.c.unwrap_or(f64::NAN));
        match &d.counterexample {
            Some(ce) => {
                c.text("counterexample stratum", "R+x0", &ce.stratum);
                c.at_most("counterexample margin", 1e-12, ce.margin.unwrap_or(f64::NAN));
                c.truth("failure escapes K", false, ce.escapes_k);
            }
            None => c.push("directed counterexample", "present".into(), "absent".into(), false),
        }
    }
}

pub fn nonclosed_union() -> Fixture {
    Fixture {
        name: "nonclosed_union",
        summary: "SUBSTITUTE geometry: {R+ x 0, R- x 0, origin}, two non-closed strata whose union (the x-axis) is closed",
        provenance: "stand-in for an unspecified figure; not the original drawing",
        run: run_nonclosed,
    }
}

fn run_nonclosed(o: &GalleryOptions, c: &mut Checks) {
    let tol = tol_for(o);
    let sigma = nonclosed_union_sigma();
    let rep = validate(&sigma, &BoxRegion::cube(2, 2.0), 41, tol.on_stratum);
    c.truth("strata disjoint (sampled)", true, rep.disjointness_violations.is_empty());
    c.truth("union closed (frontier spot check)", true, rep.closure_misses.is_empty());
    c.text("r", "Some(0)", &format!("{:?}", rep.r));
    let origin2 = p(&[0.0, 0.0]);
    let on = |s: &Stratum, y: &DVector<f64>| s.on_stratum(y, tol.on_stratum).unwrap_or(false);
    c.truth("origin lies outside R+x0 (R+x0 not closed)", false, on(&positive_x_axis(), &origin2));
    c.truth("origin lies outside R-x0 (R-x0 not closed)", false, on(&negative_x_axis(), &origin2));
    c.truth("origin in the union", true, sigma.strata.iter().any(|s| on(s, &origin2)));
    if let Some(seq) = c.ok(
        "sequence",
        sequence_from_curve(&positive_x_axis(), &positive_ray(), &origin2, &harmonic_schedule(), tol),
    ) {
        if let Some(r) = c.ok("condition (a)", check_condition_a(&origin(), &origin2, &seq, tol)) {
            c.truth("condition (a) over the point stratum holds", true, r.holds);
            c.at_most("residual over the point stratum", 0.0, r.containment_residual);
        }
        let fault = FaultInstance::from_stratification(&sigma, "origin", "R+x0", origin2.clone(), seq, 2);
        if let Some(fault) = c.ok("fault", fault) {
            c.error_kind("witness over a point stratum is refused", "NotAFault", analyze_fault(&fault, 2, tol).map(|_| ()));
        }
    }
}

pub fn oscillation() -> Fixture {
    Fixture {
        name: "oscillation",
        summary: "X = x-axis, Y = {(t, t^2 sin(1/t))}: (a) refuted or certified depending on the approach",
        provenance: "regression fixture with a curved Y; slopes and residuals by differentiation",
        run: run_oscillation,
    }
}

fn run_oscillation(o: &GalleryOptions, c: &mut Checks) {
    let tol = tol_for(o);
    let y = oscillating_curve();
    let curve = oscillating_curve_param();
    let origin2 = p(&[0.0, 0.0]);
    let slope = |s: &Subspace<f64>| {
        let b = s.basis();
        b[(1, 0)] / b[(0, 0)]
    };

    if let Some(seq) = c.ok("steep sequence", sequence_from_curve(&y, &curve, &origin2, &oscillation::steep(), tol)) {
        let worst = seq
            .tangents
            .iter()
            .zip(seq.params.as_deref().unwrap_or(&[]))
            .skip(4)
            .map(|(t, tk)| (slope(t) + 1.0).abs() / tk)
            .fold(0.0, f64::max);
        c.at_most("max_{k>=5} |slope_k + 1| / t_k", 2.0, worst);
        if let Some(r) = c.ok("steep (a)", check_condition_a(&x_axis(), &origin2, &seq, tol)) {
            c.text("steep approach", "Refuted", &format!("{:?}", r.verdict));
            c.close("steep residual", std::f64::consts::FRAC_1_SQRT_2, r.containment_residual, 1e-3);
            if let Some(tau) = &r.tau_limit {
                let target = Subspace::span(2, &[p(&[1.0, -1.0])]);
                if let Some(d) = c.ok("tau distance", subspace_distance(tau, &target)) {
                    c.at_most("distance of tau to span{(1,-1)}", 1e-3, d);
                }
            }
        }
    }
    if let Some(seq) = c.ok("flat sequence", sequence_from_curve(&y, &curve, &origin2, &oscillation::flat(), tol)) {
        if let Some(r) = c.ok("flat (a)", check_condition_a(&x_axis(), &origin2, &seq, tol)) {
            c.text("flat approach", "Certified", &format!("{:?}", r.verdict));
            c.at_most("flat residual", tol.a, r.containment_residual);
        }
    }
    if let Some(seq) = c.ok("mixed sequence", sequence_from_curve(&y, &curve, &origin2, &oscillation_mixed(), tol)) {
        if let Some(r) = c.ok("mixed (a)", check_condition_a(&x_axis(), &origin2, &seq, tol)) {
            c.text("mixed phases", "NoLimit", &format!("{:?}", r.verdict));
            c.truth("mixed phases converged", false, r.converged);
        }
    }
}

pub fn complex_axes() -> Fixture {
    Fixture {
        name: "complex_axes",
        summary: "{C* x 0, 0 x C} in C^2 with source M = C: the complex witness family",
        provenance: "complex rerun of the axes fixture; exact checks over the Gaussian rationals",
        run: run_complex,
    }
}

fn run_complex(o: &GalleryOptions, c: &mut Checks) {
    let tol = tol_for(o);
    let Some((fault, source)) = c.ok("complex fault", complex_fault(tol)) else { return };
    if let Some(w) = c.ok("complex witness", complex_witness(&fault, &source, &WitnessOptions::default(), tol)) {
        let rep = &w.report;
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let e1 = DMatrix::from_row_slice(2, 1, &[one, zero]);
        let h = rep.h.h.basis();
        c.truth("H = span_C{(1,0)} (exact)", true, exact::contains(h, &e1) && exact::contains(&e1, h));
        c.text(
            "dim(H + T_xX), dim(H + tau) (exact)",
            "2, 1",
            &format!("{}, {}", exact::sum_dim(h, rep.tangent_x.basis()), exact::sum_dim(h, rep.tau.basis())),
        );
        c.truth("f transverse to X at w", true, rep.verdict_x.transverse);
        let z0 = DVector::<Complex64>::zeros(1);
        let values = w
            .g_k
            .iter()
            .enumerate()
            .all(|(k, g)| g.eval(&z0) == DVector::from_vec(vec![Complex64::new(1.0 / (k + 1) as f64, 0.0), zero]));
        c.truth("g^k(0) = (1/k, 0) exactly, k = 1..40", true, values);
        let worst_margin = rep.members.iter().map(|m| m.margin_y).fold(0.0, f64::max);
        c.at_most("max_k margin of f^k at w against Y", 1e-10, worst_margin);
        c.truth("f^k not transverse to Y for every k", true, rep.members.iter().all(|m| !m.verdict_y.transverse));
        let worst_c1 = rep
            .members
            .iter()
            .map(|m| (m.c1_support - 1.0 / m.k as f64).abs())
            .fold(0.0, f64::max);
        c.at_most("max_k |c1_distance(g^k, g) - 1/k|", 1e-9, worst_c1);
    }
    if let Some(real) = c.ok("real fault", golubitsky_fault(tol)) {
        c.error_kind(
            "real fault fed to the complex witness",
            "InvalidOperands",
            complex_witness_any(&AnyFault::Real(real), &WitnessOptions::default(), tol).map(|_| ()),
        );
    }
}

pub fn top_dimensional() -> Fixture {
    Fixture {
        name: "top_dimensional",
        summary: "open upper half-plane over the x-axis: (a) certified since the limit plane is all of R^2",
        provenance: "regression fixture for the top-dimensional case",
        run: run_top,
    }
}

fn run_top(o: &GalleryOptions, c: &mut Checks) {
    let tol = tol_for(o);
    let sigma = top_dimensional_sigma();
    let approaches: Vec<Approach> = [-0.7, 0.0, 0.3]
        .into_iter()
        .map(|a| Approach {
            x_stratum: "Rx0".into(),
            y_stratum: "upper".into(),
            x: p(&[a, 0.0]),
            curve: Arc::new(AffineMap::new(p(&[a, 0.0]), DMatrix::from_row_slice(2, 1, &[0.5, 1.0]))),
            schedule: Schedule::default(),
        })
        .collect();
    if let Some(scan) = c.ok("scan", scan_pairs(&sigma, &approaches, tol)) {
        c.truth("certified on the given approaches", true, scan.certified_a_regular);
        let worst = scan
            .pairs
            .iter()
            .flat_map(|p| p.reports.iter())
            .map(|r| r.containment_residual)
            .fold(0.0, f64::max);
        c.at_most("max residual", 1e-10, worst);
        let dims: Vec<usize> = scan
            .pairs
            .iter()
            .flat_map(|p| p.reports.iter())
            .filter_map(|r| r.tau_limit.as_ref().map(Subspace::dim))
            .collect();
        c.truth("every limit plane is R^2", true, dims.len() == 3 && dims.iter().all(|&d| d == 2));
        let verdicts: Vec<AVerdict> = scan.pairs.iter().flat_map(|p| p.reports.iter().map(|r| r.verdict)).collect();
        c.truth("all certified", true, verdicts.iter().all(|v| *v == AVerdict::Certified));
    }
    let f = PolynomialMap::from_terms(1, &[&[(&[1], 1.0)], &[(&[0], 0.0)]]);
    if let Some(v) = c.ok("open stratum", is_transverse_at(&f, &p(&[0.2]), sigma.stratum("Rx0").expect("present"), tol)) {
        c.text("x -> (x, 0) against the x-axis", "RankDeficient", &format!("{:?}", v.reason));
    }
    let up = PolynomialMap::from_terms(1, &[&[(&[1], 1.0)], &[(&[0], 1.0)]]);
    if let Some(v) = c.ok("open stratum", is_transverse_at(&up, &p(&[0.2]), sigma.stratum("upper").expect("present"), tol)) {
        c.text("any map into the open stratum", "RankFull", &format!("{:?}", v.reason));
        c.truth("margin is infinite", true, v.margin == Some(f64::INFINITY));
    }
}

/// All fixtures, ordered by name.
pub fn fixtures() -> Vec<Fixture> {
    let mut all = vec![
        complex_axes(),
        golubitsky_axes(),
        hirsch_circle(),
        nonclosed_union(),
        oscillation(),
        top_dimensional(),
    ];
    all.sort_by_key(|f| f.name);
    all
}

pub fn find(name: &str) -> Option<Fixture> {
    fixtures().into_iter().find(|f| f.name == name)
}

/// Runs every fixture concurrently; reports come back in name order.
pub fn run_all(opts: &GalleryOptions) -> Vec<FixtureReport> {
    fixtures().par_iter().map(|f| f.run(opts)).collect()
}
