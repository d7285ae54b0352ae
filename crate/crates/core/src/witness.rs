//! Explicit non-transverse families built from a condition-(a) fault.
//!
//! Given strata `X`, `Y`, a point `x` of `X` and a sequence `y_k -> x` in `Y`
//! whose tangent planes converge to a limit `tau` missing a direction of
//! `T_x X`, the pipeline produces a map `f` transverse to `X` at `w = 0` and
//! maps `f^k -> f` with `f^k(w) = y_k` that fail transversality to `Y` at `w`.
//!
//! Stages: [`analyze_fault`] (limit, fault direction, decomposition, `H`,
//! reference basis), [`align_bases`] (per-k bases converging to the
//! reference), then [`real_witness`] (bump-localised maps) or
//! [`complex_witness`] (affine holomorphic maps).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{c1_distance, AffineMap, BoxRegion, BumpFunction, DifferentiableMap, GridSpec, Localized, MapRef};
use crate::linalg::svd;
use crate::regularity::{estimate_tau_limit, TangentSequence};
use crate::scalar::{real_coords, Field, Scalar};
use crate::strata::{Stratification, Stratum};
use crate::subspace::{
    complement_within, extend_to_basis, intersect, numeric_rank, subspace_distance, sum, Subspace,
};
use crate::tolerances::Tolerances;
use crate::transversality::{is_transverse_at, margin_eta, Reason, TransversalityVerdict};

/// Input data of the construction.
#[derive(Debug, Clone)]
pub struct FaultInstance<T: Scalar = f64> {
    pub x_stratum: Stratum<T>,
    pub y_stratum: Stratum<T>,
    pub x: DVector<T>,
    pub seq: TangentSequence<T>,
    /// Smallest stratum dimension of the ambient stratification.
    pub r: usize,
    /// Source dimension (real case; the complex case takes it from the source subspace).
    pub m: usize,
    /// Fault direction; chosen automatically when absent.
    pub v: Option<DVector<T>>,
}

impl<T: Scalar> FaultInstance<T> {
    /// Looks up the strata by name and takes `r` from `sigma`.
    pub fn from_stratification(
        sigma: &Stratification<T>,
        x_name: &str,
        y_name: &str,
        x: DVector<T>,
        seq: TangentSequence<T>,
        m: usize,
    ) -> Result<Self> {
        let get = |name: &str| {
            sigma
                .stratum(name)
                .cloned()
                .ok_or_else(|| Error::InvalidOperands(format!("no stratum `{name}` in `{}`", sigma.name)))
        };
        Ok(Self {
            x_stratum: get(x_name)?,
            y_stratum: get(y_name)?,
            x,
            seq,
            r: sigma.min_dim().unwrap_or(0),
            m,
            v: None,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.x_stratum.ambient_dim
    }
}

/// `T_x X = E + W1 + T1`, `tau = T1 + T2`, ambient `= E + W1 + W2 + T1 + T2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Decomposition<T: Scalar = f64> {
    pub e: Subspace<T>,
    pub w1: Subspace<T>,
    pub w2: Subspace<T>,
    pub t1: Subspace<T>,
    pub t2: Subspace<T>,
}

impl<T: Scalar> Decomposition<T> {
    pub fn parts(&self) -> [(&'static str, &Subspace<T>); 5] {
        [("E", &self.e), ("W1", &self.w1), ("W2", &self.w2), ("T1", &self.t1), ("T2", &self.t2)]
    }

    pub fn dims(&self) -> [usize; 5] {
        self.parts().map(|(_, s)| s.dim())
    }
}

/// Multiplies by a unit scalar so the first entry of modulus > 1e-12 is real positive.
pub fn normalize_phase<T: Scalar>(v: DVector<T>) -> DVector<T> {
    match v.iter().find(|c| c.modulus() > 1e-12).copied() {
        Some(c) => {
            let m = c.modulus();
            v * c.conjugate().unscale(m)
        }
        None => v,
    }
}

fn normalized_vectors<T: Scalar>(s: &Subspace<T>) -> Vec<DVector<T>> {
    s.basis_vectors().into_iter().map(normalize_phase).collect()
}

/// Gram-Schmidt in the given order; nearly dependent vectors are dropped.
fn orthonormalize<T: Scalar>(vs: &[DVector<T>]) -> Vec<DVector<T>> {
    let mut out: Vec<DVector<T>> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let c = q.dotc(&w);
                w -= q * c;
            }
        }
        let n = w.norm();
        if n > 1e-10 * v.norm().max(1e-300) {
            out.push(w.unscale(n));
        }
    }
    out
}

fn columns<T: Scalar>(n: usize, vs: &[DVector<T>]) -> DMatrix<T> {
    DMatrix::from_fn(n, vs.len(), |r, c| vs[c][r])
}

/// Unit vector of `T_x X` farthest from `tau`: the top right singular
/// direction of `(I - P_tau) B_X`, phase-normalised.
pub fn fault_direction<T: Scalar>(tx: &Subspace<T>, tau: &Subspace<T>, tol_a: f64) -> Result<DVector<T>> {
    if tx.dim() == 0 {
        return Err(Error::NotAFault("T_x X is zero-dimensional".into()));
    }
    let res = tau.residual_of(tx.basis());
    let s = svd(&res);
    let top = s.sigma.first().copied().unwrap_or(0.0);
    if top <= tol_a {
        return Err(Error::NotAFault(format!(
            "T_x X lies in the limit plane (residual {top:.3e})"
        )));
    }
    let coeffs = s.v.column(0).into_owned();
    let v = tx.basis() * coeffs;
    let n = v.norm();
    Ok(normalize_phase(v.unscale(n)))
}

pub fn decompose<T: Scalar>(tx: &Subspace<T>, tau: &Subspace<T>, v: &DVector<T>, tol: &Tolerances) -> Result<Decomposition<T>> {
    let n = tx.ambient_dim();
    if tau.ambient_dim() != n || v.len() != n {
        return Err(Error::InvalidOperands("fault data live in different ambient spaces".into()));
    }
    if !tx.contains_vector(v, tol.grass) {
        return Err(Error::NotAFault("v is not tangent to X".into()));
    }
    if tau.contains_vector(v, tol.a) {
        return Err(Error::NotAFault("v lies in the limit plane".into()));
    }
    let e = Subspace::span(n, &[v.clone()]);
    let t1 = intersect(tx, tau)?;
    let w1 = complement_within(&sum(&e, &t1)?, tx)?;
    let t2 = complement_within(&t1, tau)?;
    let w2 = sum(tx, tau)?.orthogonal_complement();
    let d = Decomposition { e, w1, w2, t1, t2 };
    let total: usize = d.dims().iter().sum();
    let all: Vec<DVector<T>> = d.parts().iter().flat_map(|(_, s)| s.basis_vectors()).collect();
    let rd = numeric_rank(&columns(n, &all), tol.rank);
    if total != n || rd.numeric_rank != n {
        return Err(Error::ConstructionContradiction(format!(
            "decomposition dims {:?} (sum {total}, rank {}) do not split dimension {n}",
            d.dims(),
            rd.numeric_rank
        )));
    }
    Ok(d)
}

/// `H` with `T2 + W2 ⊆ H ⊆ T1 + T2 + W1 + W2` and `dim H = n - r`, plus its
/// ordered orthonormal basis `v_1, ..., v_{n-r}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct HConstruction<T: Scalar = f64> {
    pub h: Subspace<T>,
    /// Dimension of `H + T_x X` (must be `n`).
    pub dim_h_plus_tx: usize,
    /// Dimension of `H + tau` (must be below `n`).
    pub dim_h_plus_tau: usize,
}

/// Starts from `T2 + W2` and appends vectors of `T1`, then `W1`, until the
/// dimension is `n - r`. The basis lists the `T1` part, `T2`, the `W1` part,
/// then `W2`, orthonormalised in that order.
pub fn construct_h<T: Scalar>(
    d: &Decomposition<T>,
    tx: &Subspace<T>,
    tau: &Subspace<T>,
    r: usize,
    tol: &Tolerances,
) -> Result<HConstruction<T>> {
    let n = d.e.ambient_dim();
    let target = n.checked_sub(r).ok_or_else(|| {
        Error::DimensionHypothesisViolated(format!("r = {r} exceeds the ambient dimension {n}"))
    })?;
    let floor = d.t2.dim() + d.w2.dim();
    let ceiling = floor + d.t1.dim() + d.w1.dim();
    if target < floor || target > ceiling {
        return Err(Error::InfeasibleH(format!(
            "need dim H = {target} between dim(T2+W2) = {floor} and dim(T1+T2+W1+W2) = {ceiling}"
        )));
    }
    let mut extra = target - floor;
    let take_t1 = extra.min(d.t1.dim());
    extra -= take_t1;
    let take_w1 = extra;
    let t1v = normalized_vectors(&d.t1);
    let w1v = normalized_vectors(&d.w1);
    let mut ordered: Vec<DVector<T>> = t1v[..take_t1].to_vec();
    ordered.extend(normalized_vectors(&d.t2));
    ordered.extend(w1v[..take_w1].iter().cloned());
    ordered.extend(normalized_vectors(&d.w2));
    let basis = orthonormalize(&ordered);
    if basis.len() != target {
        return Err(Error::ConstructionContradiction(format!(
            "H basis collapsed to {} vectors (expected {target})",
            basis.len()
        )));
    }
    let h = Subspace::from_orthonormal(columns(n, &basis), tol.ortho.max(1e-9))?;
    let dim_h_plus_tx = sum(&h, tx)?.dim();
    let dim_h_plus_tau = sum(&h, tau)?.dim();
    if dim_h_plus_tx != n || dim_h_plus_tau >= n {
        return Err(Error::ConstructionContradiction(format!(
            "dim(H + T_x X) = {dim_h_plus_tx}, dim(H + tau) = {dim_h_plus_tau} in dimension {n}"
        )));
    }
    Ok(HConstruction {
        h,
        dim_h_plus_tx,
        dim_h_plus_tau,
    })
}

/// Orthonormal basis `v_1..v_{n-1}, v'` of the ambient space: `v_1..v_{n-r}`
/// spans `H`, `v_1..v_p` spans `P = H + tau`, and `v'` is the part of the
/// fault direction orthogonal to `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceBasis<T: Scalar = f64> {
    pub vectors: DMatrix<T>,
    pub h_dim: usize,
    pub p: usize,
}

pub fn reference_basis<T: Scalar>(hc: &HConstruction<T>, tau: &Subspace<T>, v: &DVector<T>) -> Result<ReferenceBasis<T>> {
    let n = tau.ambient_dim();
    let p_space = sum(&hc.h, tau)?;
    let p = p_space.dim();
    let mut cols = hc.h.basis_vectors();
    cols.extend(normalized_vectors(&complement_within(&hc.h, &p_space)?));
    let off = p_space.residual_of_vector(v);
    let off_norm = off.norm();
    if off_norm <= 1e-12 {
        return Err(Error::ConstructionContradiction("fault direction lies in H + tau".into()));
    }
    let v_prime = off.unscale(off_norm);
    let outside = p_space.orthogonal_complement();
    let middle = complement_within(&Subspace::span(n, &[v_prime.clone()]), &outside)?;
    cols.extend(normalized_vectors(&middle));
    cols.push(v_prime);
    let vectors = columns(n, &orthonormalize(&cols));
    if vectors.ncols() != n {
        return Err(Error::ConstructionContradiction("reference basis is not complete".into()));
    }
    Ok(ReferenceBasis {
        vectors,
        h_dim: hc.h.dim(),
        p,
    })
}

/// Everything derived from the fault before any map is built.
#[derive(Debug, Clone)]
pub struct FaultAnalysis<T: Scalar = f64> {
    pub tangent_x: Subspace<T>,
    pub tau: Subspace<T>,
    pub v: DVector<T>,
    pub decomposition: Decomposition<T>,
    pub h: HConstruction<T>,
    pub reference: ReferenceBasis<T>,
}

pub fn analyze_fault<T: Scalar>(fault: &FaultInstance<T>, source_dim: usize, tol: &Tolerances) -> Result<FaultAnalysis<T>> {
    let n = fault.ambient_dim();
    if fault.y_stratum.ambient_dim != n || fault.x.len() != n {
        return Err(Error::InvalidOperands("fault strata and point live in different spaces".into()));
    }
    if fault.x_stratum.dim == 0 || fault.y_stratum.dim == 0 {
        return Err(Error::NotAFault(
            "strata of dimension 0 carry no condition-(a) fault".into(),
        ));
    }
    if fault.r == 0 || fault.r >= n {
        return Err(Error::DimensionHypothesisViolated(format!(
            "need 1 <= r < n, got r = {}, n = {n}",
            fault.r
        )));
    }
    if source_dim < n - fault.r {
        return Err(Error::DimensionHypothesisViolated(format!(
            "source dimension {source_dim} is below n - r = {}",
            n - fault.r
        )));
    }
    if !fault.x_stratum.on_stratum(&fault.x, tol.on_stratum)? {
        return Err(Error::NotOnStratum(fault.x_stratum.name.clone()));
    }
    let tangent_x = fault.x_stratum.tangent_at(&fault.x, tol.on_stratum)?;
    let est = estimate_tau_limit(&fault.seq, tol.conv)?;
    let tau = est.tau.ok_or_else(|| {
        Error::NotAFault(format!(
            "tangent planes of `{}` do not converge (tail spread {:.3e})",
            fault.y_stratum.name, est.tail_spread
        ))
    })?;
    let v = match &fault.v {
        Some(v) => normalize_phase(v.unscale(v.norm())),
        None => fault_direction(&tangent_x, &tau, tol.a)?,
    };
    let decomposition = decompose(&tangent_x, &tau, &v, tol)?;
    let h = construct_h(&decomposition, &tangent_x, &tau, fault.r, tol)?;
    let reference = reference_basis(&h, &tau, &v)?;
    Ok(FaultAnalysis {
        tangent_x,
        tau,
        v,
        decomposition,
        h,
        reference,
    })
}

/// Per-k basis `v_1^k..v_{n-1}^k, v^k` with `tau_k ⊆ span(v_1^k..v_p^k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedBasis<T: Scalar = f64> {
    pub vectors: DMatrix<T>,
    /// `max_i |v_i^k - v_i|`.
    pub residual: f64,
    pub h_k: Subspace<T>,
    /// `dist(H^k, H)`.
    pub h_distance: f64,
    /// `dim(H^k + tau_k)`, below `n` by construction.
    pub dim_hk_plus_tau_k: usize,
}

/// Unitary `R` minimising `|a R - b|_F` for orthonormal `a`, `b` of equal shape.
fn procrustes<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    if a.ncols() == 0 {
        return DMatrix::zeros(0, 0);
    }
    let s = svd(&(a.adjoint() * b));
    &s.u * s.v.adjoint()
}

/// Aligns each `P_k = tau_k + C` (with `C` the complement of `tau` in
/// `P = H + tau`) and its orthogonal complement onto the reference blocks by
/// orthogonal Procrustes.
pub fn align_bases<T: Scalar>(
    seq: &TangentSequence<T>,
    analysis: &FaultAnalysis<T>,
    tol: &Tolerances,
) -> Result<Vec<AlignedBasis<T>>> {
    let refb = &analysis.reference;
    let n = refb.vectors.nrows();
    let p = refb.p;
    let tau = &analysis.tau;
    if refb.vectors.ncols() != n || p > n || refb.h_dim > p {
        return Err(Error::AlignmentFailure(format!(
            "reference basis is {}x{} with p = {p}, dim H = {}",
            n,
            refb.vectors.ncols(),
            refb.h_dim
        )));
    }
    if seq.tangents.iter().any(|t| t.ambient_dim() != n || t.dim() != tau.dim()) {
        return Err(Error::AlignmentFailure(
            "sequence tangents do not match the limit plane's dimensions".into(),
        ));
    }
    let p_space = Subspace::from_spanning(&refb.vectors.columns(0, p).into_owned());
    let c = complement_within(tau, &p_space)?;
    let ref_in = refb.vectors.columns(0, p).into_owned();
    let ref_out = refb.vectors.columns(p, n - p).into_owned();
    let h = &analysis.h.h;
    let out: Vec<AlignedBasis<T>> = seq
        .tangents
        .iter()
        .enumerate()
        .map(|(i, tk)| {
            let pk = sum(tk, &c)?;
            if pk.dim() != p {
                return Err(Error::AlignmentFailure(format!(
                    "k = {}: tau_k + C has dimension {} instead of {p}",
                    i + 1,
                    pk.dim()
                )));
            }
            let inside = pk.basis() * procrustes(pk.basis(), &ref_in);
            let ok = pk.orthogonal_complement();
            let outside = ok.basis() * procrustes(ok.basis(), &ref_out);
            let mut vectors = DMatrix::zeros(n, n);
            vectors.columns_mut(0, p).copy_from(&inside);
            vectors.columns_mut(p, n - p).copy_from(&outside);
            let residual = (0..n)
                .map(|j| (vectors.column(j) - refb.vectors.column(j)).norm())
                .fold(0.0, f64::max);
            let h_k = Subspace::from_orthonormal(vectors.columns(0, refb.h_dim).into_owned(), 1e-9)?;
            let h_distance = subspace_distance(&h_k, h)?;
            let dim_hk_plus_tau_k = sum(&h_k, tk)?.dim();
            if dim_hk_plus_tau_k >= n {
                return Err(Error::ConstructionContradiction(format!(
                    "k = {}: H^k + tau_k spans the ambient space",
                    i + 1
                )));
            }
            Ok(AlignedBasis {
                vectors,
                residual,
                h_k,
                h_distance,
                dim_hk_plus_tau_k,
            })
        })
        .collect::<Result<_>>()?;
    // residuals must shrink along the sequence, up to rounding and slow wobble
    let first = out.first().map_or(0.0, |a| a.residual);
    let last = out.last().map_or(0.0, |a| a.residual);
    if last > first + tol.grass {
        return Err(Error::AlignmentFailure(format!(
            "alignment residual grew from {first:.3e} to {last:.3e}"
        )));
    }
    let mut running = f64::INFINITY;
    for (i, a) in out.iter().enumerate() {
        if a.residual > 2.0 * running + tol.grass {
            return Err(Error::AlignmentFailure(format!(
                "alignment residual jumps to {:.3e} at k = {}",
                a.residual,
                i + 1
            )));
        }
        running = running.min(a.residual);
    }
    Ok(out)
}

/// Columns `v_1..v_{n-r}` of `basis` written into the first columns of an `n x m` matrix.
fn l_matrix<T: Scalar>(basis: &DMatrix<T>, h_dim: usize, m: usize) -> DMatrix<T> {
    let n = basis.nrows();
    let mut l = DMatrix::zeros(n, m);
    l.columns_mut(0, h_dim).copy_from(&basis.columns(0, h_dim));
    l
}

/// `L(a) = a_1 v_1 + ... + a_{n-r} v_{n-r}` on `F^m`.
pub fn build_l<T: Scalar>(h_basis: &[DVector<T>], m: usize) -> Result<AffineMap<T>> {
    let h = h_basis.len();
    if h == 0 {
        return Err(Error::DimensionHypothesisViolated("n - r = 0: L would vanish".into()));
    }
    if m < h {
        return Err(Error::DimensionHypothesisViolated(format!(
            "source dimension {m} is below n - r = {h}"
        )));
    }
    let n = h_basis[0].len();
    Ok(AffineMap::linear(l_matrix(&columns(n, h_basis), h, m)))
}

/// `x + λ(z) L z`: equals `x + L z` on the plateau, the constant `x` outside
/// the support.
pub fn localize(l: &AffineMap, x: &DVector<f64>, bump: &BumpFunction) -> Localized {
    let base: MapRef = Arc::new(AffineMap::constant(x.clone(), l.matrix.ncols()));
    Localized::new(base, bump.clone(), Arc::new(l.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessOptions {
    /// Half-width of the source chart box; `None` for a global chart.
    pub chart_radius: Option<f64>,
    /// Grid points per axis for the C^1 distances.
    pub grid: GridSpec,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        Self {
            chart_radius: None,
            grid: GridSpec::new(401),
        }
    }
}

impl WitnessOptions {
    /// Plateau half-width `min(1/2, R/4)`; the support is twice as wide.
    pub fn plateau_radius(&self) -> f64 {
        self.chart_radius.map_or(0.5, |r| (r / 4.0).min(0.5))
    }

    /// Points per axis actually used in dimension `d` (capped near 2e4 points in total).
    pub fn per_axis(&self, d: usize) -> usize {
        let cap = (20_000f64).powf(1.0 / d.max(1) as f64).floor() as usize;
        self.grid.points_per_axis.min(cap).max(3)
    }
}

/// One member `f^k` and its checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberReport {
    pub k: usize,
    pub y_k: Vec<f64>,
    /// `v_1^k..v_{n-1}^k, v^k`, each in real coordinates.
    pub aligned: Vec<Vec<f64>>,
    pub alignment_residual: f64,
    pub h_distance: f64,
    pub dim_hk_plus_tau_k: usize,
    /// `|f^k(w) - y_k|_inf`.
    pub value_error: f64,
    /// `|Df^k(w) - L^k|_max`.
    pub jacobian_error: f64,
    pub verdict_y: TransversalityVerdict,
    pub margin_y: f64,
    /// Sampled C^1 distance to `f` on the plateau `K`.
    pub c1_plateau: f64,
    /// Sampled C^1 distance to `f` on the support `K'` (or on the box for affine families).
    pub c1_support: f64,
    /// `C (|y_k - x| + max_i |v_i^k - v_i|)`.
    pub c1_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct WitnessReport<T: Scalar = f64> {
    pub field: Field,
    pub n: usize,
    pub r: usize,
    pub m: usize,
    pub x: Vec<f64>,
    pub tau: Subspace<T>,
    pub tangent_x: Subspace<T>,
    pub v: Vec<f64>,
    pub decomposition: Decomposition<T>,
    pub h: HConstruction<T>,
    /// Reference basis `v_1..v_{n-1}, v'` in real coordinates.
    pub reference: Vec<Vec<f64>>,
    pub p: usize,
    /// Plateau and support boxes of the bump (real case).
    pub plateau: Option<BoxRegion>,
    pub support: Option<BoxRegion>,
    /// Box on which the C^1 distances were sampled.
    pub sample_box: BoxRegion,
    pub constant_c: f64,
    pub verdict_x: TransversalityVerdict,
    pub verdict_y: TransversalityVerdict,
    /// Every member from this index on fails transversality to `Y` at `w`.
    pub threshold_k: usize,
    pub members: Vec<MemberReport>,
}

fn max_abs<T: Scalar>(it: impl IntoIterator<Item = T>) -> f64 {
    it.into_iter().map(|c| c.modulus()).fold(0.0, f64::max)
}

fn vectors_of<T: Scalar>(m: &DMatrix<T>) -> Vec<Vec<f64>> {
    m.column_iter().map(|c| real_coords(&c.into_owned())).collect()
}

struct Member<T: Scalar> {
    map: MapRef<T>,
    restricted_l: DMatrix<T>,
}

/// Shared tail of both witness flavours: checks and reports for `f` and each `f^k`.
#[allow(clippy::too_many_arguments)]
fn assemble<T: Scalar>(
    fault: &FaultInstance<T>,
    analysis: &FaultAnalysis<T>,
    aligned: &[AlignedBasis<T>],
    f: &dyn DifferentiableMap<T>,
    members: &[Member<T>],
    m: usize,
    boxes: (Option<BoxRegion>, Option<BoxRegion>, BoxRegion),
    constant_c: f64,
    per_axis: usize,
    tol: &Tolerances,
) -> Result<WitnessReport<T>> {
    let n = fault.ambient_dim();
    let w = DVector::<T>::zeros(m);
    let verdict_x = is_transverse_at(f, &w, &fault.x_stratum, tol)?;
    let verdict_y = is_transverse_at(f, &w, &fault.y_stratum, tol)?;
    if !verdict_x.transverse || verdict_x.reason != Reason::RankFull {
        return Err(Error::ConstructionContradiction(format!(
            "f is not transverse to `{}` at w ({:?})",
            fault.x_stratum.name, verdict_x.reason
        )));
    }
    let (plateau, support, sample_box) = boxes;
    let reports: Vec<MemberReport> = members
        .par_iter()
        .zip(aligned.par_iter())
        .enumerate()
        .map(|(i, (mem, al))| {
            let yk = &fault.seq.points[i];
            let fk = mem.map.as_ref();
            let value_error = max_abs((fk.eval(&w) - yk).iter().copied());
            let jacobian_error = max_abs((fk.jacobian(&w) - &mem.restricted_l).iter().copied());
            if value_error > 1e-14 * (1.0 + yk.norm()) || jacobian_error > 1e-12 {
                return Err(Error::ConstructionContradiction(format!(
                    "k = {}: f^k(w) off by {value_error:.3e}, Df^k(w) off by {jacobian_error:.3e}",
                    i + 1
                )));
            }
            let verdict = is_transverse_at(fk, &w, &fault.y_stratum, tol)?;
            let margin_y = margin_eta(fk, &w, &fault.y_stratum, tol)?;
            let grid = GridSpec::new(per_axis);
            let c1_support = c1_distance(fk, f, &sample_box, grid);
            let c1_plateau = plateau.as_ref().map_or(c1_support, |b| c1_distance(fk, f, b, grid));
            let dy = (yk - &fault.x).norm();
            let c1_bound = constant_c * (dy + al.residual);
            if c1_support > c1_bound * (1.0 + 1e-12) + 1e-15 {
                return Err(Error::ConstructionContradiction(format!(
                    "k = {}: C^1 distance {c1_support:.3e} exceeds the bound {c1_bound:.3e}",
                    i + 1
                )));
            }
            Ok(MemberReport {
                k: i + 1,
                y_k: real_coords(yk),
                aligned: vectors_of(&al.vectors),
                alignment_residual: al.residual,
                h_distance: al.h_distance,
                dim_hk_plus_tau_k: al.dim_hk_plus_tau_k,
                value_error,
                jacobian_error,
                verdict_y: verdict,
                margin_y,
                c1_plateau,
                c1_support,
                c1_bound,
            })
        })
        .collect::<Result<_>>()?;
    let threshold_k = match reports.iter().rposition(|r| r.verdict_y.transverse) {
        None => 1,
        Some(i) if i + 1 < reports.len() => i + 2,
        Some(_) => {
            return Err(Error::ConstructionContradiction(format!(
                "the last member is still transverse to `{}` at w",
                fault.y_stratum.name
            )))
        }
    };
    Ok(WitnessReport {
        field: T::FIELD,
        n,
        r: fault.r,
        m,
        x: real_coords(&fault.x),
        tau: analysis.tau.clone(),
        tangent_x: analysis.tangent_x.clone(),
        v: real_coords(&analysis.v),
        decomposition: analysis.decomposition.clone(),
        h: analysis.h.clone(),
        reference: vectors_of(&analysis.reference.vectors),
        p: analysis.reference.p,
        plateau,
        support,
        sample_box,
        constant_c,
        verdict_x,
        verdict_y,
        threshold_k,
        members: reports,
    })
}

/// Real witness: `f = x + λ L`, `f^k = f + λ (y_k - x + (L^k - L) z)`.
pub struct WitnessFamily {
    pub report: WitnessReport<f64>,
    pub l: AffineMap,
    pub bump: BumpFunction,
    pub f: Arc<Localized>,
    pub members: Vec<Arc<Localized>>,
}

pub fn real_witness(fault: &FaultInstance<f64>, opts: &WitnessOptions, tol: &Tolerances) -> Result<WitnessFamily> {
    let m = fault.m;
    let analysis = analyze_fault(fault, m, tol)?;
    let aligned = align_bases(&fault.seq, &analysis, tol)?;
    let hd = analysis.reference.h_dim;
    let l = AffineMap::linear(l_matrix(&analysis.reference.vectors, hd, m));
    let rho = opts.plateau_radius();
    let bump = BumpFunction::centered(m, rho)?;
    let f = Arc::new(localize(&l, &fault.x, &bump));
    let f_ref: MapRef = f.clone();
    let (members, lks): (Vec<Arc<Localized>>, Vec<DMatrix<f64>>) = aligned
        .iter()
        .zip(&fault.seq.points)
        .map(|(al, yk)| {
            let lk = l_matrix(&al.vectors, hd, m);
            let local = AffineMap::new(yk - &fault.x, &lk - &l.matrix);
            (Arc::new(Localized::new(f_ref.clone(), bump.clone(), Arc::new(local))), lk)
        })
        .unzip();
    let r_inf = 2.0 * rho;
    let constant_c = (1.0 + bump.derivative_bound()) * (hd as f64 * r_inf).max(1.0) + 1.0;
    let packed: Vec<Member<f64>> = members
        .iter()
        .zip(lks)
        .map(|(mk, lk)| Member {
            map: mk.clone() as MapRef,
            restricted_l: lk,
        })
        .collect();
    let report = assemble(
        fault,
        &analysis,
        &aligned,
        f.as_ref(),
        &packed,
        m,
        (Some(bump.plateau()), Some(bump.support()), bump.support()),
        constant_c,
        opts.per_axis(m),
        tol,
    )?;
    Ok(WitnessFamily {
        report,
        l,
        bump,
        f,
        members,
    })
}

/// The tangent space `T_w M` of a complex source through `w = 0` in `C^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSource {
    pub tangent: Subspace<Complex64>,
}

impl ComplexSource {
    pub fn new(tangent: Subspace<Complex64>) -> Self {
        Self { tangent }
    }

    /// From a real subspace of `R^{2p}` (coordinates `re_1, im_1, ...`), which
    /// must be invariant under multiplication by `i`.
    pub fn from_real_basis(p: usize, basis: &DMatrix<f64>, tol: f64) -> Result<Self> {
        if basis.nrows() != 2 * p {
            return Err(Error::DimensionMismatch(format!(
                "real basis has {} rows, expected {}",
                basis.nrows(),
                2 * p
            )));
        }
        let s = Subspace::from_spanning(basis);
        // multiplication by i: (re, im) -> (-im, re)
        let mut jb = DMatrix::zeros(2 * p, s.dim());
        for c in 0..s.dim() {
            for j in 0..p {
                jb[(2 * j, c)] = -s.basis()[(2 * j + 1, c)];
                jb[(2 * j + 1, c)] = s.basis()[(2 * j, c)];
            }
        }
        let defect = crate::subspace::spectral_norm(&s.residual_of(&jb));
        if defect > tol || s.dim() % 2 != 0 {
            return Err(Error::NonComplexSubspace(defect.max(if s.dim() % 2 != 0 { 1.0 } else { 0.0 })));
        }
        let cols: Vec<DVector<Complex64>> = s
            .basis_vectors()
            .into_iter()
            .map(|v| DVector::from_fn(p, |j, _| Complex64::new(v[2 * j], v[2 * j + 1])))
            .collect();
        Ok(Self {
            tangent: Subspace::span(p, &cols),
        })
    }

    pub fn p(&self) -> usize {
        self.tangent.ambient_dim()
    }

    pub fn m(&self) -> usize {
        self.tangent.dim()
    }
}

/// Complex witness: affine `g(z) = x + L z`, `g^k(z) = y_k + L^k z` on `C^p`,
/// restricted to the source subspace `T_w M`.
pub struct ComplexWitness {
    pub report: WitnessReport<Complex64>,
    /// `L` on `C^p`.
    pub l: DMatrix<Complex64>,
    pub g: AffineMap<Complex64>,
    pub g_k: Vec<AffineMap<Complex64>>,
    /// Restrictions to `T_w M`, in the coordinates of its orthonormal basis.
    pub f: AffineMap<Complex64>,
    pub f_k: Vec<AffineMap<Complex64>>,
}

/// Either flavour of fault, as read from a file.
#[derive(Debug, Clone)]
pub enum AnyFault {
    Real(FaultInstance<f64>),
    Complex(FaultInstance<Complex64>, ComplexSource),
}

impl AnyFault {
    pub fn field(&self) -> Field {
        match self {
            AnyFault::Real(_) => Field::Real,
            AnyFault::Complex(..) => Field::Complex,
        }
    }
}

/// Rejects real faults.
pub fn complex_witness_any(fault: &AnyFault, opts: &WitnessOptions, tol: &Tolerances) -> Result<ComplexWitness> {
    match fault {
        AnyFault::Complex(f, src) => complex_witness(f, src, opts, tol),
        AnyFault::Real(_) => Err(Error::InvalidOperands(
            "the complex witness needs complex fault data".into(),
        )),
    }
}

pub fn complex_witness(
    fault: &FaultInstance<Complex64>,
    source: &ComplexSource,
    opts: &WitnessOptions,
    tol: &Tolerances,
) -> Result<ComplexWitness> {
    let m = source.m();
    let analysis = analyze_fault(fault, m, tol)?;
    let aligned = align_bases(&fault.seq, &analysis, tol)?;
    let hd = analysis.reference.h_dim;
    // u_1..u_m spans T_w M; L(sum a_i u_i) = sum_{i <= n-r} a_i v_i
    let u = extend_to_basis(&source.tangent);
    let u_h = u.columns(0, hd).adjoint();
    let l = analysis.reference.vectors.columns(0, hd) * &u_h;
    let um = source.tangent.basis().clone();
    let g = AffineMap::new(fault.x.clone(), l.clone());
    let f = AffineMap::new(fault.x.clone(), &l * &um);
    let mut g_k = Vec::with_capacity(aligned.len());
    let mut f_k = Vec::with_capacity(aligned.len());
    let mut packed = Vec::with_capacity(aligned.len());
    for (al, yk) in aligned.iter().zip(&fault.seq.points) {
        let lk = al.vectors.columns(0, hd) * &u_h;
        let restricted = &lk * &um;
        g_k.push(AffineMap::new(yk.clone(), lk));
        let fk = AffineMap::new(yk.clone(), restricted.clone());
        f_k.push(fk.clone());
        packed.push(Member {
            map: Arc::new(fk) as MapRef<Complex64>,
            restricted_l: restricted,
        });
    }
    let radius = opts.chart_radius.unwrap_or(1.0);
    let sample_box = BoxRegion::cube(2 * m, radius);
    // affine difference: value <= |dy| + m R |dL|, derivative <= |dL|
    let constant_c = (m as f64 * radius * hd as f64).max(1.0) + 1.0;
    let report = assemble(
        fault,
        &analysis,
        &aligned,
        &f,
        &packed,
        m,
        (None, None, sample_box),
        constant_c,
        opts.per_axis(2 * m),
        tol,
    )?;
    Ok(ComplexWitness {
        report,
        l,
        g,
        g_k,
        f,
        f_k,
    })
}
