//! Whitney condition (a) along explicit approach sequences.
//!
//! Condition (a) is a statement about every convergent sequence of tangent
//! planes; here it is only ever checked along the sequences a caller supplies.
//! A failing sequence is a genuine refutation, a passing one certifies that
//! approach and nothing more.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DifferentiableMap, MapRef};
use crate::scalar::{real_coords, Scalar};
use crate::strata::{Stratification, Stratum};
use crate::subspace::{containment_residual, subspace_distance, Subspace};
use crate::tolerances::Tolerances;

/// Parameter values `t_k` fed to an approach curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Schedule {
    /// `t_k = t0 * rho^k`, `k = 1..=n`.
    Geometric { t0: f64, rho: f64, n: usize },
    Explicit { t: Vec<f64> },
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Geometric {
            t0: 0.5,
            rho: 0.7,
            n: 40,
        }
    }
}

impl Schedule {
    pub fn params(&self) -> Vec<f64> {
        match self {
            Schedule::Geometric { t0, rho, n } => (1..=*n as i32).map(|k| t0 * rho.powi(k)).collect(),
            Schedule::Explicit { t } => t.clone(),
        }
    }

    pub fn explicit(f: impl Fn(usize) -> f64, ks: impl IntoIterator<Item = usize>) -> Self {
        Schedule::Explicit {
            t: ks.into_iter().map(f).collect(),
        }
    }
}

/// Points of a stratum `Y` approaching `limit_point`, with their tangent planes.
#[derive(Debug, Clone)]
pub struct TangentSequence<T: Scalar = f64> {
    pub stratum: String,
    pub points: Vec<DVector<T>>,
    pub tangents: Vec<Subspace<T>>,
    pub limit_point: DVector<T>,
    pub curve: Option<String>,
    pub params: Option<Vec<f64>>,
}

impl<T: Scalar> TangentSequence<T> {
    /// Builds a sequence from explicit points, checking membership and approach.
    pub fn from_points(y: &Stratum<T>, points: Vec<DVector<T>>, limit_point: DVector<T>, tol: &Tolerances) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidOperands("empty tangent sequence".into()));
        }
        let mut tangents = Vec::with_capacity(points.len());
        for p in &points {
            if !y.on_stratum(p, tol.on_stratum)? {
                return Err(Error::NotOnStratum(format!("{} (at {:?})", y.name, real_coords(p))));
            }
            tangents.push(y.tangent_at(p, tol.on_stratum)?);
        }
        let first = (&points[0] - &limit_point).norm();
        let last = (&points[points.len() - 1] - &limit_point).norm();
        if points.len() > 1 && last >= first {
            return Err(Error::InvalidOperands(format!(
                "sequence does not approach the limit point (first distance {first:.3e}, last {last:.3e})"
            )));
        }
        Ok(Self {
            stratum: y.name.clone(),
            points,
            tangents,
            limit_point,
            curve: None,
            params: None,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `y_k = c(t_k)` along the schedule; `c` has one (real) parameter.
pub fn sequence_from_curve<T: Scalar>(
    y: &Stratum<T>,
    curve: &dyn DifferentiableMap<T>,
    x: &DVector<T>,
    schedule: &Schedule,
    tol: &Tolerances,
) -> Result<TangentSequence<T>> {
    if curve.source_dim() != 1 || curve.target_dim() != y.ambient_dim {
        return Err(Error::DimensionMismatch(format!(
            "approach curve must map 1 parameter into dimension {}, got {} -> {}",
            y.ambient_dim,
            curve.source_dim(),
            curve.target_dim()
        )));
    }
    let params = schedule.params();
    let points = params
        .iter()
        .map(|&t| curve.eval(&DVector::from_element(1, T::from_real(t))))
        .collect();
    let mut seq = TangentSequence::from_points(y, points, x.clone(), tol)?;
    seq.curve = Some(curve.describe());
    seq.params = Some(params);
    Ok(seq)
}

/// Cauchy test of the tangent planes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LimitEstimate<T: Scalar = f64> {
    pub converged: bool,
    pub tau: Option<Subspace<T>>,
    /// Largest pairwise distance among the last quarter of the tangents.
    pub tail_spread: f64,
    /// Distance of each tangent to the final one.
    pub distance_to_final: Vec<f64>,
}

/// Converged when all pairwise distances in the last quarter (at least two
/// tangents) are within `tol_conv`; the estimate is the final tangent.
pub fn estimate_tau_limit<T: Scalar>(seq: &TangentSequence<T>, tol_conv: f64) -> Result<LimitEstimate<T>> {
    let n = seq.tangents.len();
    if n < 5 {
        return Err(Error::InvalidOperands(format!(
            "limit estimation needs at least 5 tangents, got {n}"
        )));
    }
    let last = &seq.tangents[n - 1];
    let distance_to_final = seq
        .tangents
        .iter()
        .map(|t| subspace_distance(t, last))
        .collect::<Result<Vec<_>>>()?;
    let tail = &seq.tangents[n - (n / 4).max(2)..];
    let mut spread = 0.0f64;
    for (i, a) in tail.iter().enumerate() {
        for b in &tail[i + 1..] {
            spread = spread.max(subspace_distance(a, b)?);
        }
    }
    let converged = spread <= tol_conv;
    Ok(LimitEstimate {
        converged,
        tau: converged.then(|| last.clone()),
        tail_spread: spread,
        distance_to_final,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AVerdict {
    /// The limit exists and contains `T_x X`, for this approach.
    Certified,
    /// The limit exists and misses a direction of `T_x X`.
    Refuted,
    /// The tangent planes did not settle.
    NoLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostic {
    pub k: usize,
    pub t: Option<f64>,
    pub y: Vec<f64>,
    pub distance_to_final: f64,
    /// `|(I - P_{tau_k}) B_X|_2`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ConditionAReport<T: Scalar = f64> {
    pub x_stratum: String,
    pub y_stratum: String,
    pub x: Vec<f64>,
    pub curve: Option<String>,
    pub converged: bool,
    pub tau_limit: Option<Subspace<T>>,
    pub tangent_x: Subspace<T>,
    /// Against the limit when it exists, otherwise against the final tangent.
    pub containment_residual: f64,
    pub tail_spread: f64,
    pub holds: bool,
    pub verdict: AVerdict,
    pub steps: Vec<StepDiagnostic>,
}

pub fn check_condition_a<T: Scalar>(
    x_stratum: &Stratum<T>,
    x: &DVector<T>,
    seq: &TangentSequence<T>,
    tol: &Tolerances,
) -> Result<ConditionAReport<T>> {
    if !x_stratum.on_stratum(x, tol.on_stratum)? {
        return Err(Error::NotOnStratum(x_stratum.name.clone()));
    }
    if (x - &seq.limit_point).norm() > tol.on_stratum * (1.0 + x.norm()) {
        return Err(Error::InvalidOperands(format!(
            "sequence approaches {:?}, not {:?}",
            real_coords(&seq.limit_point),
            real_coords(x)
        )));
    }
    let tx = x_stratum.tangent_at(x, tol.on_stratum)?;
    let est = estimate_tau_limit(seq, tol.conv)?;
    let reference = est.tau.clone().unwrap_or_else(|| seq.tangents[seq.len() - 1].clone());
    let residual = containment_residual(&reference, &tx)?;
    let steps = seq
        .tangents
        .iter()
        .enumerate()
        .map(|(i, tk)| {
            Ok(StepDiagnostic {
                k: i + 1,
                t: seq.params.as_ref().map(|p| p[i]),
                y: real_coords(&seq.points[i]),
                distance_to_final: est.distance_to_final[i],
                residual: containment_residual(tk, &tx)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let holds = est.converged && residual <= tol.a;
    let verdict = match (est.converged, holds) {
        (false, _) => AVerdict::NoLimit,
        (true, true) => AVerdict::Certified,
        (true, false) => AVerdict::Refuted,
    };
    Ok(ConditionAReport {
        x_stratum: x_stratum.name.clone(),
        y_stratum: seq.stratum.clone(),
        x: real_coords(x),
        curve: seq.curve.clone(),
        converged: est.converged,
        tau_limit: est.tau,
        tangent_x: tx,
        containment_residual: residual,
        tail_spread: est.tail_spread,
        holds,
        verdict,
        steps,
    })
}

/// A frontier point of `x_stratum` approached from `y_stratum` along a curve.
#[derive(Debug, Clone)]
pub struct Approach<T: Scalar = f64> {
    pub x_stratum: String,
    pub y_stratum: String,
    pub x: DVector<T>,
    pub curve: MapRef<T>,
    pub schedule: Schedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PairSummary<T: Scalar = f64> {
    pub x_stratum: String,
    pub y_stratum: String,
    pub certified: usize,
    pub refuted: usize,
    pub no_limit: usize,
    pub errors: Vec<String>,
    pub reports: Vec<ConditionAReport<T>>,
}

impl<T: Scalar> PairSummary<T> {
    /// Every supplied approach certified and none errored.
    pub fn certified_on_approaches(&self) -> bool {
        self.refuted == 0 && self.no_limit == 0 && self.errors.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ScanReport<T: Scalar = f64> {
    pub stratification: String,
    pub pairs: Vec<PairSummary<T>>,
    /// No pair was refuted, lacked a limit, or errored. Vacuously true with no pairs.
    pub certified_a_regular: bool,
}

/// Runs every approach and groups the reports by ordered stratum pair, in
/// order of first appearance.
pub fn scan_pairs<T: Scalar>(
    sigma: &Stratification<T>,
    approaches: &[Approach<T>],
    tol: &Tolerances,
) -> Result<ScanReport<T>> {
    for a in approaches {
        for name in [&a.x_stratum, &a.y_stratum] {
            if sigma.stratum(name).is_none() {
                return Err(Error::InvalidOperands(format!(
                    "no stratum `{name}` in `{}`",
                    sigma.name
                )));
            }
        }
        if a.x_stratum == a.y_stratum {
            return Err(Error::InvalidOperands(format!(
                "approach pairs stratum `{}` with itself",
                a.x_stratum
            )));
        }
    }
    let outcomes: Vec<Result<ConditionAReport<T>>> = approaches
        .par_iter()
        .map(|a| {
            let xs = sigma.stratum(&a.x_stratum).expect("checked");
            let ys = sigma.stratum(&a.y_stratum).expect("checked");
            let seq = sequence_from_curve(ys, a.curve.as_ref(), &a.x, &a.schedule, tol)?;
            check_condition_a(xs, &a.x, &seq, tol)
        })
        .collect();
    let mut pairs: Vec<PairSummary<T>> = Vec::new();
    for (a, out) in approaches.iter().zip(outcomes) {
        let idx = match pairs
            .iter()
            .position(|p| p.x_stratum == a.x_stratum && p.y_stratum == a.y_stratum)
        {
            Some(i) => i,
            None => {
                pairs.push(PairSummary {
                    x_stratum: a.x_stratum.clone(),
                    y_stratum: a.y_stratum.clone(),
                    certified: 0,
                    refuted: 0,
                    no_limit: 0,
                    errors: Vec::new(),
                    reports: Vec::new(),
                });
                pairs.len() - 1
            }
        };
        let p = &mut pairs[idx];
        match out {
            Ok(r) => {
                match r.verdict {
                    AVerdict::Certified => p.certified += 1,
                    AVerdict::Refuted => p.refuted += 1,
                    AVerdict::NoLimit => p.no_limit += 1,
                }
                p.reports.push(r);
            }
            Err(e) => p.errors.push(e.to_string()),
        }
    }
    let certified_a_regular = pairs.iter().all(|p| p.certified_on_approaches());
    Ok(ScanReport {
        stratification: sigma.name.clone(),
        pairs,
        certified_a_regular,
    })
}

/// Schedules for the oscillating curve `(t, t^2 sin(1/t))`.
pub mod oscillation {
    use super::Schedule;
    use std::f64::consts::PI;

    /// `t_k = 1/(2 pi k + k^-3)`, `k = 1..=40`: just past the zeros `1/(2 pi k)`
    /// (which lie on the x-axis), slopes tend to `-1`.
    pub fn steep() -> Schedule {
        Schedule::explicit(|k| 1.0 / (2.0 * PI * k as f64 + (k as f64).powi(-3)), 1..=40)
    }

    /// `t_k = 1/((2k + 1/2) pi)` along `k = 10^4 j^2`, `j = 1..=40`: slopes are
    /// `2 t_k`, so the planes flatten onto the x-axis.
    pub fn flat() -> Schedule {
        Schedule::explicit(
            |j| {
                let k = 1e4 * (j * j) as f64;
                1.0 / ((2.0 * k + 0.5) * PI)
            },
            1..=40,
        )
    }
}
