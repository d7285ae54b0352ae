//! Transversality of a map to strata, at a point and on a sampled compact box.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{BoxRegion, DifferentiableMap, GridSpec};
use crate::scalar::{from_real_coords, real_coords, Scalar};
use crate::strata::{Stratification, Stratum};
use crate::subspace::{hcat, singular_values, spectral_norm, RankDecision, Subspace};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reason {
    MissesStratum,
    RankFull,
    RankDeficient,
}

fn ser_margin<S: Serializer>(m: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match m {
        Some(x) if x.is_infinite() => s.serialize_str("inf"),
        Some(x) => s.serialize_f64(*x),
        None => s.serialize_none(),
    }
}

fn de_margin<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum M {
        Num(f64),
        Text(String),
    }
    match Option::<M>::deserialize(d)? {
        None => Ok(None),
        Some(M::Num(x)) => Ok(Some(x)),
        Some(M::Text(t)) if t == "inf" => Ok(Some(f64::INFINITY)),
        Some(M::Text(t)) => Err(serde::de::Error::custom(format!("bad margin `{t}`"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransversalityVerdict {
    pub stratum: String,
    pub transverse: bool,
    pub reason: Reason,
    /// `eta` when the image point lies on the stratum (`"inf"` for open strata).
    #[serde(serialize_with = "ser_margin", deserialize_with = "de_margin")]
    pub margin: Option<f64>,
    pub rank_decision: Option<RankDecision>,
}

impl TransversalityVerdict {
    pub fn conclusive(&self) -> bool {
        self.rank_decision.is_none_or(|r| r.conclusive)
    }
}

/// `max(1, |Df|_2)`, the scale applied to `Df` in the rank block.
pub fn differential_scale<T: Scalar>(df: &DMatrix<T>) -> f64 {
    spectral_norm(df).max(1.0)
}

/// `sigma_min(Q^H Df)` for an orthonormal basis `Q` of the complement of `ts`.
///
/// `+inf` when the complement is zero; `0` when `Df` has fewer columns than
/// the codimension.
pub fn margin_from_differential<T: Scalar>(df: &DMatrix<T>, ts: &Subspace<T>) -> f64 {
    let q = ts.orthogonal_complement();
    let c = q.dim();
    if c == 0 {
        return f64::INFINITY;
    }
    if df.ncols() < c {
        return 0.0;
    }
    let qd = q.basis().adjoint() * df;
    singular_values(&qd).get(c - 1).copied().unwrap_or(0.0)
}

/// Rank decision of `[Df/s | B_TS]`; transverse iff the rank is the ambient dimension.
///
/// The threshold is `tol_rank * max(1, sigma_max)`: both blocks have unit
/// scale, so a small `Df` against a point stratum is not judged relative to itself.
pub fn block_rank<T: Scalar>(df: &DMatrix<T>, ts: &Subspace<T>, tol_rank: f64) -> RankDecision {
    let s = differential_scale(df);
    let block = hcat(&df.unscale(s), ts.basis());
    crate::subspace::numeric_rank_floored(&block, tol_rank, 1.0)
}

/// Verdict for a point whose image is already known to lie on `s`.
pub fn verdict_on_stratum<T: Scalar>(
    df: &DMatrix<T>,
    ts: &Subspace<T>,
    name: &str,
    tol: &Tolerances,
) -> TransversalityVerdict {
    let rd = block_rank(df, ts, tol.rank);
    let n = ts.ambient_dim();
    let transverse = rd.numeric_rank == n;
    TransversalityVerdict {
        stratum: name.to_string(),
        transverse,
        reason: if transverse {
            Reason::RankFull
        } else {
            Reason::RankDeficient
        },
        margin: Some(margin_from_differential(df, ts)),
        rank_decision: Some(rd),
    }
}

fn check_dims<T: Scalar>(f: &dyn DifferentiableMap<T>, x: &DVector<T>, s: &Stratum<T>) -> Result<()> {
    if x.len() != f.source_dim() || f.target_dim() != s.ambient_dim {
        return Err(Error::DimensionMismatch(format!(
            "map {} -> {}, point of dimension {}, stratum in dimension {}",
            f.source_dim(),
            f.target_dim(),
            x.len(),
            s.ambient_dim
        )));
    }
    Ok(())
}

pub fn is_transverse_at<T: Scalar>(
    f: &dyn DifferentiableMap<T>,
    x: &DVector<T>,
    s: &Stratum<T>,
    tol: &Tolerances,
) -> Result<TransversalityVerdict> {
    check_dims(f, x, s)?;
    let y = f.eval(x);
    if !s.on_stratum(&y, tol.on_stratum)? {
        return Ok(TransversalityVerdict {
            stratum: s.name.clone(),
            transverse: true,
            reason: Reason::MissesStratum,
            margin: None,
            rank_decision: None,
        });
    }
    let ts = s.tangent_at(&y, tol.on_stratum)?;
    Ok(verdict_on_stratum(&f.jacobian(x), &ts, &s.name, tol))
}

/// The margin `eta` at a point whose image lies on `s`.
pub fn margin_eta<T: Scalar>(
    f: &dyn DifferentiableMap<T>,
    x: &DVector<T>,
    s: &Stratum<T>,
    tol: &Tolerances,
) -> Result<f64> {
    check_dims(f, x, s)?;
    let y = f.eval(x);
    if !s.on_stratum(&y, tol.on_stratum)? {
        return Err(Error::NotOnStratum(s.name.clone()));
    }
    let ts = s.tangent_at(&y, tol.on_stratum)?;
    Ok(margin_from_differential(&f.jacobian(x), &ts))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratificationVerdict {
    pub transverse: bool,
    pub verdicts: Vec<TransversalityVerdict>,
}

pub fn is_transverse_to_stratification<T: Scalar>(
    f: &dyn DifferentiableMap<T>,
    x: &DVector<T>,
    sigma: &Stratification<T>,
    tol: &Tolerances,
) -> Result<StratificationVerdict> {
    let verdicts = sigma
        .strata
        .iter()
        .map(|s| is_transverse_at(f, x, s, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(StratificationVerdict {
        transverse: verdicts.iter().all(|v| v.transverse),
        verdicts,
    })
}

/// `n - r > m`: transversality reduces to the image missing the strata.
pub fn codim_shortcut_applies<T: Scalar>(sigma: &Stratification<T>, m: usize) -> bool {
    match sigma.min_dim() {
        Some(r) => sigma.ambient_dim - r > m,
        None => true,
    }
}

pub fn codim_shortcut_applies_to<T: Scalar>(s: &Stratum<T>, m: usize) -> bool {
    s.codim() > m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub index: usize,
    pub x: Vec<f64>,
    pub stratum: String,
    pub verdict: Option<TransversalityVerdict>,
    #[serde(serialize_with = "ser_margin", deserialize_with = "de_margin")]
    pub margin: Option<f64>,
    pub clearance: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub index: usize,
    pub x: Vec<f64>,
    pub stratum: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactReport {
    pub map: String,
    pub k: BoxRegion,
    pub grid: GridSpec,
    /// Every sampled verdict is transverse and none is inconclusive.
    pub transverse: bool,
    /// `transverse` with both minima strictly positive.
    pub certified: bool,
    #[serde(serialize_with = "ser_margin", deserialize_with = "de_margin")]
    pub min_margin: Option<f64>,
    pub min_margin_at: Option<Vec<f64>>,
    pub min_clearance: Option<f64>,
    pub min_clearance_at: Option<Vec<f64>>,
    pub failures: Vec<Failure>,
    pub inconclusive: Vec<Failure>,
    pub records: Vec<PointRecord>,
}

/// Grid evaluation of transversality on `k`. Parallel over grid points; the
/// report is assembled in grid order, and minima keep the lowest index on ties.
pub fn transverse_on_compact<T: Scalar>(
    f: &dyn DifferentiableMap<T>,
    k: &BoxRegion,
    sigma: &Stratification<T>,
    grid: GridSpec,
    tol: &Tolerances,
) -> Result<CompactReport> {
    if !k.is_compact() {
        return Err(Error::NoncompactSet(
            "transversality on a box needs finite bounds on every side".into(),
        ));
    }
    if k.dim() != f.source_dim() * T::COMPONENTS {
        return Err(Error::DimensionMismatch(format!(
            "box of dimension {} for a map with {} real source coordinates",
            k.dim(),
            f.source_dim() * T::COMPONENTS
        )));
    }
    let points = k.grid(grid.points_per_axis);
    let per_point: Vec<Vec<PointRecord>> = points
        .par_iter()
        .enumerate()
        .map(|(index, p)| {
            let x: DVector<T> = from_real_coords(p);
            sigma
                .strata
                .iter()
                .map(|s| point_record(f, &x, index, s, tol))
                .collect()
        })
        .collect();
    let records: Vec<PointRecord> = per_point.into_iter().flatten().collect();

    let mut failures = Vec::new();
    let mut inconclusive = Vec::new();
    let mut min_margin: Option<(f64, Vec<f64>)> = None;
    let mut min_clear: Option<(f64, Vec<f64>)> = None;
    for r in &records {
        if let Some(e) = &r.error {
            inconclusive.push(Failure {
                index: r.index,
                x: r.x.clone(),
                stratum: r.stratum.clone(),
                reason: e.clone(),
            });
            continue;
        }
        let v = r.verdict.as_ref().expect("verdict present without error");
        if !v.transverse {
            failures.push(Failure {
                index: r.index,
                x: r.x.clone(),
                stratum: r.stratum.clone(),
                reason: format!("{:?}", v.reason),
            });
        } else if !v.conclusive() {
            inconclusive.push(Failure {
                index: r.index,
                x: r.x.clone(),
                stratum: r.stratum.clone(),
                reason: "rank decision inconclusive".into(),
            });
        }
        if let Some(m) = r.margin {
            if min_margin.as_ref().is_none_or(|(b, _)| m < *b) {
                min_margin = Some((m, r.x.clone()));
            }
        }
        if let Some(c) = r.clearance {
            if min_clear.as_ref().is_none_or(|(b, _)| c < *b) {
                min_clear = Some((c, r.x.clone()));
            }
        }
    }
    let transverse = failures.is_empty() && inconclusive.is_empty();
    let certified = transverse
        && min_margin.as_ref().is_none_or(|(m, _)| *m > 0.0)
        && min_clear.as_ref().is_none_or(|(c, _)| *c > 0.0);
    Ok(CompactReport {
        map: f.describe(),
        k: k.clone(),
        grid,
        transverse,
        certified,
        min_margin: min_margin.as_ref().map(|m| m.0),
        min_margin_at: min_margin.map(|m| m.1),
        min_clearance: min_clear.as_ref().map(|c| c.0),
        min_clearance_at: min_clear.map(|c| c.1),
        failures,
        inconclusive,
        records,
    })
}

fn point_record<T: Scalar>(
    f: &dyn DifferentiableMap<T>,
    x: &DVector<T>,
    index: usize,
    s: &Stratum<T>,
    tol: &Tolerances,
) -> PointRecord {
    let mut rec = PointRecord {
        index,
        x: real_coords(x),
        stratum: s.name.clone(),
        verdict: None,
        margin: None,
        clearance: None,
        error: None,
    };
    match is_transverse_at(f, x, s, tol) {
        Ok(v) => {
            if v.reason == Reason::MissesStratum {
                match s.clearance(&f.eval(x)) {
                    Ok(c) => rec.clearance = Some(c),
                    Err(e) => rec.error = Some(e.to_string()),
                }
            }
            rec.margin = v.margin;
            rec.verdict = Some(v);
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AffineMap, MapRef, PolynomialMap, Shifted};
    use crate::strata::library::*;
    use std::sync::Arc;

    fn parabola(c0: f64) -> PolynomialMap {
        PolynomialMap::from_terms(1, &[&[(&[1], 1.0)], &[(&[2], 1.0), (&[0], c0)]])
    }

    fn pt(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn pointwise_examples() {
        let v = is_transverse_at(&parabola(0.0), &pt(0.0), &y_axis(), &tol()).unwrap();
        assert!(v.transverse);
        assert_eq!(v.reason, Reason::RankFull);
        assert_eq!(v.margin, Some(1.0));

        // a horizontal input shift keeps the vertex at the origin, off R+ x 0
        let c = 0.3;
        let shifted = Shifted::input(Arc::new(parabola(0.0)), pt(c));
        let v = is_transverse_at(&shifted, &pt(c), &positive_x_axis(), &tol());
        assert_eq!(v.unwrap().reason, Reason::MissesStratum);
        // shifting the image right puts the vertex on R+ x 0, tangentially
        let right = Shifted::output(Arc::new(parabola(0.0)), DVector::from_vec(vec![c, 0.0]));
        let v = is_transverse_at(&right, &pt(0.0), &positive_x_axis(), &tol()).unwrap();
        assert!(!v.transverse);
        assert_eq!(v.reason, Reason::RankDeficient);
        assert!(v.margin.unwrap() <= 1e-12);

        let v = is_transverse_at(&parabola(1.0), &pt(0.7), &circle(), &tol()).unwrap();
        assert_eq!(v.reason, Reason::MissesStratum);
        assert!(v.margin.is_none());
    }

    #[test]
    fn margin_examples() {
        assert_eq!(margin_eta(&parabola(0.0), &pt(0.0), &y_axis(), &tol()).unwrap(), 1.0);
        let id = AffineMap::linear(DMatrix::<f64>::identity(2, 2));
        for a in [0.0, 0.7, 2.0] {
            let y = DVector::from_vec(vec![f64::cos(a), f64::sin(a)]);
            let m = margin_eta(&id, &y, &circle(), &tol()).unwrap();
            assert!((m - 1.0).abs() < 1e-12);
        }
        assert!(matches!(
            margin_eta(&parabola(0.0), &pt(1.0), &y_axis(), &tol()),
            Err(Error::NotOnStratum(_))
        ));
    }

    #[test]
    fn stratification_examples() {
        let gol = Stratification::new("g", 2, vec![positive_x_axis(), y_axis()]).unwrap();
        let v = is_transverse_to_stratification(&parabola(0.0), &pt(0.0), &gol, &tol()).unwrap();
        assert!(v.transverse);
        assert_eq!(v.verdicts[0].reason, Reason::MissesStratum);
        assert_eq!(v.verdicts[1].reason, Reason::RankFull);
        let empty = Stratification::<f64>::new("empty", 2, Vec::new()).unwrap();
        assert!(is_transverse_to_stratification(&parabola(0.0), &pt(0.0), &empty, &tol()).unwrap().transverse);
    }

    #[test]
    fn shortcut_examples() {
        let pt_strat = Stratification::new("p", 2, vec![origin()]).unwrap();
        assert!(codim_shortcut_applies(&pt_strat, 1));
        let circ = Stratification::new("c", 2, vec![circle()]).unwrap();
        assert!(!codim_shortcut_applies(&circ, 1));
        let gol = Stratification::new("g", 2, vec![positive_x_axis(), y_axis()]).unwrap();
        assert!(!codim_shortcut_applies(&gol, 1));
    }

    #[test]
    fn compact_examples() {
        let circ = Stratification::new("c", 2, vec![circle()]).unwrap();
        let rep = transverse_on_compact(
            &parabola(1.0),
            &BoxRegion::interval(0.5, 2.0),
            &circ,
            GridSpec::default(),
            &tol(),
        )
        .unwrap();
        assert!(rep.transverse && rep.certified);
        assert!(rep.min_clearance.unwrap() > 0.3);
        assert!(rep.min_margin.is_none());

        let gol = Stratification::new("g", 2, vec![positive_x_axis(), y_axis()]).unwrap();
        let rep = transverse_on_compact(
            &parabola(0.0),
            &BoxRegion::interval(-1.0, 1.0),
            &gol,
            GridSpec::default(),
            &tol(),
        )
        .unwrap();
        assert!(rep.transverse);
        assert_eq!(rep.min_margin, Some(1.0));
        assert_eq!(rep.min_margin_at, Some(vec![0.0]));

        let c = 0.875;
        let g: MapRef = Arc::new(Shifted::input(Arc::new(parabola(1.0)), pt(c)));
        let rep = transverse_on_compact(g.as_ref(), &BoxRegion::interval(0.5, 2.0), &circ, GridSpec::new(5), &tol())
            .unwrap();
        assert!(!rep.transverse);
        assert_eq!(rep.failures[0].x, vec![c]);
    }

    #[test]
    fn noncompact_box_is_refused() {
        let circ = Stratification::new("c", 2, vec![circle()]).unwrap();
        let k = BoxRegion::new(vec![Some(0.0)], vec![None]).unwrap();
        assert!(matches!(
            transverse_on_compact(&parabola(1.0), &k, &circ, GridSpec::new(5), &tol()),
            Err(Error::NoncompactSet(_))
        ));
    }
}
