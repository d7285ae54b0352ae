//! Weak subbasic neighbourhoods `N(f, U, V, K, eps)` and openness probes.
//!
//! Membership is decided on a sample grid of `K` with first-order control
//! (values and first derivatives). Probes perturb a transverse map inside the
//! neighbourhood, by seeded random polynomials localised with a bump and by
//! directed one-parameter families, and report whether transversality on `K`
//! survives.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    c1_distance, BoxRegion, BumpFunction, Chart, DifferentiableMap, GridSpec, Localized, MapRef, Monomial,
    PolynomialMap,
};
use crate::scalar::real_coords;
use crate::strata::Stratification;
use crate::tolerances::Tolerances;
use crate::transversality::{is_transverse_at, margin_eta, transverse_on_compact, TransversalityVerdict};

/// Halvings tried before a random draw is given up.
pub const MAX_HALVINGS: usize = 20;
/// Degree of random perturbation polynomials.
pub const DEFAULT_DEGREE: u32 = 3;

#[derive(Debug, Clone)]
pub struct WeakNeighborhoodSpec {
    pub base: MapRef,
    pub src_chart: Chart,
    pub tgt_chart: Chart,
    pub k: BoxRegion,
    pub epsilon: f64,
    /// 0 (values only) or 1 (values and first derivatives).
    pub jet_order: u32,
}

impl WeakNeighborhoodSpec {
    pub fn new(base: MapRef, src_chart: Chart, tgt_chart: Chart, k: BoxRegion, epsilon: f64, jet_order: u32) -> Result<Self> {
        if !k.is_compact() {
            return Err(Error::NoncompactSet(
                "weak neighbourhoods control a compact K only; strong-topology (noncompact) control is not finitely checkable".into(),
            ));
        }
        if !(epsilon > 0.0) {
            return Err(Error::InvalidOperands(format!("epsilon must be positive, got {epsilon}")));
        }
        if jet_order > 1 {
            return Err(Error::InvalidOperands(format!(
                "jet order {jet_order} requested; derivatives are compared up to order 1"
            )));
        }
        if k.dim() != base.source_dim() || src_chart.dim != k.dim() || tgt_chart.dim != base.target_dim() {
            return Err(Error::DimensionMismatch(format!(
                "K has dimension {}, charts ({}, {}), map {} -> {}",
                k.dim(),
                src_chart.dim,
                tgt_chart.dim,
                base.source_dim(),
                base.target_dim()
            )));
        }
        if !src_chart.domain.contains_box(&k) {
            return Err(Error::InvalidOperands(format!(
                "K is not inside the source chart `{}`",
                src_chart.name
            )));
        }
        Ok(Self {
            base,
            src_chart,
            tgt_chart,
            k,
            epsilon,
            jet_order,
        })
    }

    /// Global charts, first-order control.
    pub fn global(base: MapRef, k: BoxRegion, epsilon: f64) -> Result<Self> {
        let src = Chart::global("U", base.source_dim());
        let tgt = Chart::global("V", base.target_dim());
        Self::new(base, src, tgt, k, epsilon, 1)
    }

    /// Sampled distance to the base map at the spec's jet order.
    pub fn distance(&self, g: &dyn DifferentiableMap, grid: GridSpec) -> f64 {
        if self.jet_order == 0 {
            self.k
                .grid(grid.points_per_axis)
                .par_iter()
                .map(|p| {
                    let z = DVector::from_column_slice(p);
                    (self.base.eval(&z) - g.eval(&z)).amax()
                })
                .reduce(|| 0.0, f64::max)
        } else {
            c1_distance(self.base.as_ref(), g, &self.k, grid)
        }
    }
}

/// `g(K) ⊂ V` on the grid and distance below `epsilon`.
pub fn nbhd_contains(spec: &WeakNeighborhoodSpec, g: &dyn DifferentiableMap, grid: GridSpec) -> bool {
    if g.source_dim() != spec.base.source_dim() || g.target_dim() != spec.base.target_dim() {
        return false;
    }
    let inside = spec
        .k
        .grid(grid.points_per_axis)
        .iter()
        .all(|p| spec.tgt_chart.domain.contains(g.eval(&DVector::from_column_slice(p)).as_slice()));
    inside && spec.distance(g, grid) < spec.epsilon
}

/// Polynomial in the normalised coordinates `u = (z - center) / half`.
#[derive(Debug, Clone)]
struct NormalizedPoly {
    poly: PolynomialMap,
    center: Vec<f64>,
    half: Vec<f64>,
}

impl NormalizedPoly {
    fn u(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(z.len(), |i, _| (z[i] - self.center[i]) / self.half[i])
    }
}

impl DifferentiableMap for NormalizedPoly {
    fn source_dim(&self) -> usize {
        self.poly.source_dim()
    }
    fn target_dim(&self) -> usize {
        self.poly.target_dim()
    }
    fn eval(&self, z: &DVector<f64>) -> DVector<f64> {
        self.poly.eval(&self.u(z))
    }
    fn jacobian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let mut j = self.poly.jacobian(&self.u(z));
        for (c, h) in self.half.iter().enumerate() {
            j.column_mut(c).unscale_mut(*h);
        }
        j
    }
    fn describe(&self) -> String {
        format!("{} in u = (z - {:?}) / {:?}", self.poly.describe(), self.center, self.half)
    }
}

/// All exponent vectors in `m` variables of total degree at most `degree`.
fn exponents(m: usize, degree: u32) -> Vec<Vec<u32>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for d in 0..=degree {
        for mut rest in exponents(m - 1, degree - d) {
            rest.insert(0, d);
            out.push(rest);
        }
    }
    out
}

fn random_poly(rng: &mut ChaCha8Rng, m: usize, n: usize, degree: u32) -> PolynomialMap {
    let exps = exponents(m, degree);
    let coords = (0..n)
        .map(|_| {
            exps.iter()
                .map(|e| Monomial {
                    exponents: e.clone(),
                    coeff: rng.random_range(-1.0..=1.0),
                })
                .collect()
        })
        .collect();
    PolynomialMap::new(m, coords).expect("well-formed random polynomial")
}

/// One member `g = f + s λ P` of a sampled neighbourhood.
#[derive(Clone)]
pub struct Perturbation {
    pub index: usize,
    pub scale: f64,
    pub halvings: usize,
    pub distance: f64,
    pub map: MapRef,
}

impl std::fmt::Debug for Perturbation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Perturbation")
            .field("index", &self.index)
            .field("scale", &self.scale)
            .field("distance", &self.distance)
            .finish()
    }
}

/// Plateau `K`, support `K` widened by half its width on every side.
pub fn perturbation_bump(k: &BoxRegion) -> Result<BumpFunction> {
    let b = k.sampling_bounds(0.0);
    let (lo, hi): (Vec<f64>, Vec<f64>) = b
        .iter()
        .map(|&(a, c)| {
            let w = (c - a).max(1e-3);
            (a - 0.5 * w, c + 0.5 * w)
        })
        .unzip();
    BumpFunction::new(k.clone(), BoxRegion::compact(&lo, &hi)?)
}

/// `f + s λ P` for a polynomial `P` in coordinates normalised to `K`.
fn localized(spec: &WeakNeighborhoodSpec, bump: &BumpFunction, poly: &PolynomialMap, s: f64) -> MapRef {
    let b = spec.k.sampling_bounds(0.0);
    let local = NormalizedPoly {
        poly: poly.scaled(s),
        center: b.iter().map(|(a, c)| 0.5 * (a + c)).collect(),
        half: b.iter().map(|(a, c)| (0.5 * (c - a)).max(1e-3)).collect(),
    };
    Arc::new(Localized::new(spec.base.clone(), bump.clone(), Arc::new(local)))
}

/// `count` seeded members of the neighbourhood. Each draw is scaled so its
/// sampled distance is half of `epsilon`, then halved until it is a member.
pub fn sample_perturbations(
    spec: &WeakNeighborhoodSpec,
    count: usize,
    seed: u64,
    grid: GridSpec,
) -> Result<Vec<Perturbation>> {
    sample_perturbations_with(spec, count, seed, grid, DEFAULT_DEGREE)
}

pub fn sample_perturbations_with(
    spec: &WeakNeighborhoodSpec,
    count: usize,
    seed: u64,
    grid: GridSpec,
    degree: u32,
) -> Result<Vec<Perturbation>> {
    if count == 0 {
        return Err(Error::InvalidOperands("count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = spec.base.source_dim();
    let n = spec.base.target_dim();
    let polys: Vec<PolynomialMap> = (0..count).map(|_| random_poly(&mut rng, m, n, degree)).collect();
    let bump = perturbation_bump(&spec.k)?;
    polys
        .par_iter()
        .enumerate()
        .map(|(index, poly)| {
            let unit = localized(spec, &bump, poly, 1.0);
            let size = spec.distance(unit.as_ref(), grid);
            let mut scale = if size > 0.0 { 0.5 * spec.epsilon / size } else { 0.0 };
            for halvings in 0..=MAX_HALVINGS {
                let g = localized(spec, &bump, poly, scale);
                if nbhd_contains(spec, g.as_ref(), grid) {
                    return Ok(Perturbation {
                        index,
                        scale,
                        halvings,
                        distance: spec.distance(g.as_ref(), grid),
                        map: g,
                    });
                }
                scale *= 0.5;
            }
            Err(Error::SamplingFailure(format!(
                "draw {index} left the neighbourhood after {MAX_HALVINGS} halvings"
            )))
        })
        .collect()
}

/// `f + s λ P` for a caller-chosen polynomial and scale (no membership check).
pub fn perturb(spec: &WeakNeighborhoodSpec, poly: &PolynomialMap, scale: f64) -> Result<MapRef> {
    Ok(localized(spec, &perturbation_bump(&spec.k)?, poly, scale))
}

type FamilyFn = dyn Fn(f64) -> MapRef + Send + Sync;
type PointFn = dyn Fn(f64) -> DVector<f64> + Send + Sync;

/// A one-parameter family `c -> g_c` with `g_0 = f`, optionally with the
/// source point where `g_c` is expected to fail transversality.
#[derive(Clone)]
pub struct DirectedFamily {
    pub name: String,
    pub family: Arc<FamilyFn>,
    pub failure_point: Option<Arc<PointFn>>,
}

impl DirectedFamily {
    pub fn new(name: impl Into<String>, family: impl Fn(f64) -> MapRef + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            family: Arc::new(family),
            failure_point: None,
        }
    }

    pub fn with_failure_point(mut self, p: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static) -> Self {
        self.failure_point = Some(Arc::new(p));
        self
    }
}

impl std::fmt::Debug for DirectedFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DirectedFamily({})", self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderStep {
    pub c: f64,
    pub distance: f64,
    pub contained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub map: String,
    pub point: Vec<f64>,
    pub stratum: String,
    pub verdict: TransversalityVerdict,
    pub margin: Option<f64>,
    /// The failure point lies outside `K`.
    pub escapes_k: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectedReport {
    pub family: String,
    /// `c_j = eps 2^-j` until the first member of the neighbourhood.
    pub ladder: Vec<LadderStep>,
    /// Largest ladder parameter whose member lies in the neighbourhood.
    pub c: Option<f64>,
    /// Bisection estimate of the membership boundary between the last two rungs.
    pub boundary_c: Option<f64>,
    pub counterexample: Option<Counterexample>,
    pub note: Option<String>,
}

const LADDER_RUNGS: usize = 40;
const BISECTION_STEPS: usize = 50;

/// Walks the ladder `c_j = eps 2^-j` to the first member of the
/// neighbourhood and looks for a non-transverse point of that member: at the
/// family's failure point when given, otherwise on the grid of `K`.
pub fn directed_probe(
    spec: &WeakNeighborhoodSpec,
    sigma: &Stratification,
    family: &DirectedFamily,
    grid: GridSpec,
    tol: &Tolerances,
) -> Result<DirectedReport> {
    let mut ladder = Vec::new();
    let mut found = None;
    let mut prev_out: Option<f64> = None;
    for j in 0..LADDER_RUNGS {
        let c = spec.epsilon * 0.5f64.powi(j as i32);
        let g = (family.family)(c);
        let distance = spec.distance(g.as_ref(), grid);
        let contained = nbhd_contains(spec, g.as_ref(), grid);
        ladder.push(LadderStep { c, distance, contained });
        if contained {
            found = Some((c, g));
            break;
        }
        prev_out = Some(c);
    }
    let Some((c, g)) = found else {
        return Ok(DirectedReport {
            family: family.name.clone(),
            ladder,
            c: None,
            boundary_c: None,
            counterexample: None,
            note: Some("no ladder member lies in the neighbourhood".into()),
        });
    };
    let boundary_c = prev_out.map(|mut hi| {
        let mut lo = c;
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if nbhd_contains(spec, (family.family)(mid).as_ref(), grid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    });
    let counterexample = match &family.failure_point {
        Some(point) => {
            let x = point(c);
            first_failure_at(g.as_ref(), &x, sigma, spec, tol)?
        }
        None => {
            let rep = transverse_on_compact(g.as_ref(), &spec.k, sigma, grid, tol)?;
            match rep.failures.first() {
                Some(f) => {
                    let x = DVector::from_column_slice(&f.x);
                    first_failure_at(g.as_ref(), &x, sigma, spec, tol)?
                }
                None => None,
            }
        }
    };
    let note = counterexample.as_ref().map(|ce| {
        if ce.escapes_k {
            "failure escapes K: weak-topology non-openness of the transversal maps over all of M".to_string()
        } else {
            "failure inside K".to_string()
        }
    });
    Ok(DirectedReport {
        family: family.name.clone(),
        ladder,
        c: Some(c),
        boundary_c,
        counterexample,
        note,
    })
}

fn first_failure_at(
    g: &dyn DifferentiableMap,
    x: &DVector<f64>,
    sigma: &Stratification,
    spec: &WeakNeighborhoodSpec,
    tol: &Tolerances,
) -> Result<Option<Counterexample>> {
    for s in &sigma.strata {
        let v = is_transverse_at(g, x, s, tol)?;
        if !v.transverse {
            let margin = margin_eta(g, x, s, tol).ok();
            return Ok(Some(Counterexample {
                map: g.describe(),
                point: real_coords(x),
                stratum: s.name.clone(),
                verdict: v,
                margin,
                escapes_k: !spec.k.contains(x.as_slice()),
            }));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub seed: u64,
    pub epsilon: f64,
    pub samples: usize,
    pub transverse_count: usize,
    pub transverse_fraction: f64,
    /// Smallest margin met on `K` over all samples (`None` if no sample met a stratum).
    pub min_margin_seen: Option<f64>,
    pub min_clearance_seen: Option<f64>,
    /// First random sample that is not transverse on `K`.
    pub counterexample: Option<Counterexample>,
    pub directed: Option<DirectedReport>,
}

/// Random probe of `N(f)` on `K`, plus an optional directed family.
pub fn probe_openness(
    spec: &WeakNeighborhoodSpec,
    sigma: &Stratification,
    count: usize,
    seed: u64,
    grid: GridSpec,
    directed: Option<&DirectedFamily>,
    tol: &Tolerances,
) -> Result<ProbeReport> {
    let base = transverse_on_compact(spec.base.as_ref(), &spec.k, sigma, grid, tol)?;
    if !base.transverse {
        return Err(Error::InvalidOperands(format!(
            "the base map is not transverse on K ({} failures, {} inconclusive)",
            base.failures.len(),
            base.inconclusive.len()
        )));
    }
    let samples = sample_perturbations(spec, count, seed, grid)?;
    let reports = samples
        .par_iter()
        .map(|p| transverse_on_compact(p.map.as_ref(), &spec.k, sigma, grid, tol))
        .collect::<Result<Vec<_>>>()?;
    let mut transverse_count = 0;
    let mut min_margin: Option<f64> = None;
    let mut min_clear: Option<f64> = None;
    let mut counterexample = None;
    for (p, r) in samples.iter().zip(&reports) {
        if r.transverse {
            transverse_count += 1;
        } else if counterexample.is_none() {
            if let Some(f) = r.failures.first().or(r.inconclusive.first()) {
                let x = DVector::from_column_slice(&f.x);
                counterexample = first_failure_at(p.map.as_ref(), &x, sigma, spec, tol)?;
            }
        }
        if let Some(m) = r.min_margin {
            min_margin = Some(min_margin.map_or(m, |b| b.min(m)));
        }
        if let Some(c) = r.min_clearance {
            min_clear = Some(min_clear.map_or(c, |b| b.min(c)));
        }
    }
    let directed = directed
        .map(|fam| directed_probe(spec, sigma, fam, grid, tol))
        .transpose()?;
    Ok(ProbeReport {
        seed,
        epsilon: spec.epsilon,
        samples: samples.len(),
        transverse_count,
        transverse_fraction: transverse_count as f64 / samples.len() as f64,
        min_margin_seen: min_margin,
        min_clearance_seen: min_clear,
        counterexample,
        directed,
    })
}
