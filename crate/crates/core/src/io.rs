//! JSON input documents: maps, strata, stratifications, condition-(a) runs,
//! faults and probe specifications.
//!
//! Documents may embed sub-documents inline or name a file; relative file
//! names resolve against the directory of the enclosing document. Parse
//! failures come back as [`Error::Malformed`] carrying `file:line:column`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{BoxRegion, Chart, DifferentiableMap, MapRef, PolynomialMap, Shifted};
use crate::neighborhoods::{DirectedFamily, WeakNeighborhoodSpec};
use crate::regularity::{sequence_from_curve, Schedule, TangentSequence};
use crate::scalar::{from_real_coords, Field, Scalar};
use crate::strata::{RegionConstraint, Relation, Stratification, Stratum};
use crate::subspace::Subspace;
use crate::tolerances::Tolerances;
use crate::witness::{AnyFault, ComplexSource, FaultInstance};

/// Parses `text`; errors name `origin` and the line and column.
pub fn parse<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        if e.is_eof() || e.is_syntax() || e.is_data() {
            Error::Malformed(format!("{origin}:{}:{}: {e}", e.line(), e.column()))
        } else {
            Error::Malformed(format!("{origin}: {e}"))
        }
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidOperands(format!("cannot read {}: {e}", path.display())))?;
    parse(&text, &path.display().to_string())
}

/// Converts an already-parsed value, reporting `origin` on failure.
fn from_value<T: DeserializeOwned>(v: serde_json::Value, origin: &str) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::Malformed(format!("{origin}: {e}")))
}

/// Inline document or a file name.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Source {
    Path(String),
    Inline(serde_json::Value),
}

impl Source {
    fn resolve(&self, base: &Path, what: &str) -> Result<(serde_json::Value, PathBuf, String)> {
        match self {
            Source::Path(p) => {
                let path = base.join(p);
                let v: serde_json::Value = read_json(&path)?;
                let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
                Ok((v, dir, path.display().to_string()))
            }
            Source::Inline(v) => Ok((v.clone(), base.to_path_buf(), format!("<inline {what}>"))),
        }
    }
}

fn peek_field(v: &serde_json::Value) -> Result<Field> {
    match v.get("field") {
        None => Ok(Field::Real),
        Some(f) => from_value(f.clone(), "field"),
    }
}

#[derive(Debug, Clone, Deserialize)]
struct ConstraintDoc {
    map: serde_json::Value,
    relation: Relation,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum ReprDoc {
    Implicit {
        map: serde_json::Value,
        #[serde(default)]
        region: Vec<ConstraintDoc>,
    },
    Parametric {
        map: serde_json::Value,
        param_box: BoxRegion,
    },
}

#[derive(Debug, Clone, Deserialize)]
struct StratumDoc {
    name: String,
    dim: Option<usize>,
    repr: ReprDoc,
}

#[derive(Debug, Clone, Deserialize)]
struct StratificationDoc {
    name: String,
    ambient_dim: usize,
    #[serde(default)]
    field: Option<Field>,
    strata: Vec<StratumDoc>,
    #[serde(default = "yes")]
    union_closed: bool,
    #[serde(default)]
    declared_a_regular: Option<bool>,
}

fn yes() -> bool {
    true
}

fn stratum_from_doc<T: Scalar>(doc: StratumDoc, origin: &str) -> Result<Stratum<T>> {
    let at = |what: &str| format!("{origin}: stratum `{}` {what}", doc.name);
    let s = match doc.repr {
        ReprDoc::Implicit { map, region } => {
            let g: PolynomialMap<T> = from_value(map, &at("constraint"))?;
            let n = g.source_dim();
            let mut cons = Vec::new();
            for (i, c) in region.into_iter().enumerate() {
                let p: PolynomialMap<T> = from_value(c.map, &at(&format!("region[{i}]")))?;
                if p.source_dim() != n || p.target_dim() != 1 {
                    return Err(Error::Malformed(format!(
                        "{}: expected a scalar function of {n} variables",
                        at(&format!("region[{i}]"))
                    )));
                }
                cons.push(RegionConstraint::new(p, c.relation));
            }
            if g.target_dim() > n {
                return Err(Error::Malformed(at("has more equations than unknowns")));
            }
            Stratum::implicit(doc.name.clone(), Arc::new(g), cons)
        }
        ReprDoc::Parametric { map, param_box } => {
            let psi: PolynomialMap<T> = from_value(map, &at("map"))?;
            if param_box.dim() != psi.source_dim() * T::COMPONENTS {
                return Err(Error::Malformed(at("param_box dimension does not match the map")));
            }
            Stratum::parametric(doc.name.clone(), Arc::new(psi), param_box)
        }
    };
    if let Some(d) = doc.dim {
        if d != s.dim {
            return Err(Error::Malformed(at(&format!("declares dim {d}, its representation gives {}", s.dim))));
        }
    }
    Ok(s)
}

fn stratification_from_value<T: Scalar>(v: serde_json::Value, origin: &str) -> Result<Stratification<T>> {
    if v.get("strata").is_none() {
        // a single stratum
        let doc: StratumDoc = from_value(v, origin)?;
        let s = stratum_from_doc::<T>(doc, origin)?;
        return Stratification::new(s.name.clone(), s.ambient_dim, vec![s]);
    }
    let doc: StratificationDoc = from_value(v, origin)?;
    if let Some(f) = doc.field {
        if f != T::FIELD {
            return Err(Error::InvalidOperands(format!(
                "{origin}: stratification is {f}, expected {}",
                T::FIELD
            )));
        }
    }
    let strata = doc
        .strata
        .into_iter()
        .map(|s| stratum_from_doc::<T>(s, origin))
        .collect::<Result<Vec<_>>>()?;
    let mut sigma = Stratification::new(doc.name, doc.ambient_dim, strata)?;
    sigma.union_closed = doc.union_closed;
    sigma.declared_a_regular = doc.declared_a_regular;
    Ok(sigma)
}

/// A stratification file, or a single-stratum file wrapped as one.
pub fn load_stratification<T: Scalar>(path: &Path) -> Result<Stratification<T>> {
    let v: serde_json::Value = read_json(path)?;
    stratification_from_value(v, &path.display().to_string())
}

pub fn parse_stratification<T: Scalar>(text: &str, origin: &str) -> Result<Stratification<T>> {
    stratification_from_value(parse(text, origin)?, origin)
}

pub fn load_map<T: Scalar>(path: &Path) -> Result<PolynomialMap<T>> {
    read_json(path)
}

/// Field tag of a map, stratum or document file (`real` when absent).
pub fn file_field(path: &Path) -> Result<Field> {
    let v: serde_json::Value = read_json(path)?;
    peek_field(&v)
}

/// `"0.5,1"`, `"0.5 1"` or a JSON array, in real coordinates.
pub fn parse_point(text: &str) -> Result<Vec<f64>> {
    let t = text.trim();
    if t.starts_with('[') {
        return parse(t, "point");
    }
    t.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| Error::Malformed(format!("point: `{s}`: {e}")))
        })
        .collect()
}

/// Real coordinates to a point over `T`, checking the length.
pub fn point<T: Scalar>(coords: &[f64], dim: usize) -> Result<DVector<T>> {
    if coords.len() != dim * T::COMPONENTS {
        return Err(Error::DimensionMismatch(format!(
            "expected {} real coordinates for a point of {}^{dim}, got {}",
            dim * T::COMPONENTS,
            if T::FIELD == Field::Real { "R" } else { "C" },
            coords.len()
        )));
    }
    Ok(from_real_coords(coords))
}

/// A condition-(a) run: `X`, `x`, and an approach into `Y` given by a curve
/// and schedule or by explicit points.
#[derive(Debug, Clone, Deserialize)]
pub struct ConditionADoc {
    pub stratification: Source,
    pub x_stratum: String,
    pub y_stratum: String,
    pub x: Vec<f64>,
    #[serde(default)]
    pub curve: Option<Source>,
    #[serde(default)]
    pub schedule: Option<Schedule>,
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
}

pub struct ConditionAInput<T: Scalar> {
    pub sigma: Stratification<T>,
    pub x_stratum: String,
    pub y_stratum: String,
    pub x: DVector<T>,
    pub seq: TangentSequence<T>,
}

impl ConditionADoc {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn field(&self, base: &Path) -> Result<Field> {
        let (v, _, _) = self.stratification.resolve(base, "stratification")?;
        Ok(match v.get("field") {
            Some(f) => from_value(f.clone(), "field")?,
            None => v
                .get("strata")
                .and_then(|s| s.get(0))
                .and_then(|s| s.pointer("/repr/map"))
                .map(peek_field)
                .transpose()?
                .unwrap_or(Field::Real),
        })
    }

    pub fn build<T: Scalar>(&self, base: &Path, tol: &Tolerances) -> Result<ConditionAInput<T>> {
        let (sv, _, so) = self.stratification.resolve(base, "stratification")?;
        let sigma: Stratification<T> = stratification_from_value(sv, &so)?;
        let y = sigma
            .stratum(&self.y_stratum)
            .ok_or_else(|| Error::InvalidOperands(format!("no stratum `{}`", self.y_stratum)))?
            .clone();
        if sigma.stratum(&self.x_stratum).is_none() {
            return Err(Error::InvalidOperands(format!("no stratum `{}`", self.x_stratum)));
        }
        let n = sigma.ambient_dim;
        let x = point::<T>(&self.x, n)?;
        let seq = match (&self.curve, &self.points) {
            (Some(c), None) => {
                let (cv, _, co) = c.resolve(base, "curve")?;
                let curve: PolynomialMap<T> = from_value(cv, &co)?;
                let schedule = self.schedule.clone().unwrap_or_default();
                sequence_from_curve(&y, &curve, &x, &schedule, tol)?
            }
            (None, Some(pts)) => {
                let pts = pts.iter().map(|p| point::<T>(p, n)).collect::<Result<Vec<_>>>()?;
                TangentSequence::from_points(&y, pts, x.clone(), tol)?
            }
            _ => {
                return Err(Error::Malformed(
                    "condition-(a) input needs exactly one of `curve` or `points`".into(),
                ))
            }
        };
        Ok(ConditionAInput {
            sigma,
            x_stratum: self.x_stratum.clone(),
            y_stratum: self.y_stratum.clone(),
            x,
            seq,
        })
    }
}

/// An (a)-fault: a condition-(a) run plus the source data. Real faults give
/// the source dimension `m`; complex faults give the source tangent space as
/// a complex subspace of `C^p`.
#[derive(Debug, Clone, Deserialize)]
pub struct FaultDoc {
    #[serde(flatten)]
    pub approach: ConditionADoc,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub source: Option<serde_json::Value>,
    #[serde(default)]
    pub chart_radius: Option<f64>,
}

impl FaultDoc {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn build(&self, base: &Path, tol: &Tolerances) -> Result<AnyFault> {
        match self.approach.field(base)? {
            Field::Real => {
                let inp = self.approach.build::<f64>(base, tol)?;
                let m = self
                    .m
                    .ok_or_else(|| Error::Malformed("a real fault needs the source dimension `m`".into()))?;
                Ok(AnyFault::Real(FaultInstance::from_stratification(
                    &inp.sigma,
                    &inp.x_stratum,
                    &inp.y_stratum,
                    inp.x,
                    inp.seq,
                    m,
                )?))
            }
            Field::Complex => {
                let inp = self.approach.build::<Complex64>(base, tol)?;
                let source = match &self.source {
                    Some(v) => ComplexSource::new(from_value::<Subspace<Complex64>>(v.clone(), "source")?),
                    None => {
                        let p = self.m.ok_or_else(|| {
                            Error::Malformed("a complex fault needs `source` (a subspace of C^p) or `m`".into())
                        })?;
                        ComplexSource::new(Subspace::full(p))
                    }
                };
                let fault = FaultInstance::from_stratification(
                    &inp.sigma,
                    &inp.x_stratum,
                    &inp.y_stratum,
                    inp.x,
                    inp.seq,
                    source.m(),
                )?;
                Ok(AnyFault::Complex(fault, source))
            }
        }
    }
}

/// Where a directed family is expected to fail.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FailurePointDoc {
    /// The literal `"shift"`: the failure sits at `c * direction`.
    Named(String),
    Fixed(Vec<f64>),
}

/// `g_c(x) = f(x - c d)` (`input_shift`) or `g_c(x) = f(x) + c d` (`output_shift`).
#[derive(Debug, Clone, Deserialize)]
pub struct DirectedDoc {
    pub kind: ShiftKind,
    pub direction: Vec<f64>,
    #[serde(default)]
    pub failure_point: Option<FailurePointDoc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftKind {
    InputShift,
    OutputShift,
}

impl DirectedDoc {
    pub fn family(&self, base: MapRef) -> Result<DirectedFamily> {
        let dim = match self.kind {
            ShiftKind::InputShift => base.source_dim(),
            ShiftKind::OutputShift => base.target_dim(),
        };
        if self.direction.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "shift direction has {} entries, expected {dim}",
                self.direction.len()
            )));
        }
        let d = DVector::from_vec(self.direction.clone());
        let kind = self.kind;
        let name = match kind {
            ShiftKind::InputShift => format!("g_c(x) = f(x - c {:?})", self.direction),
            ShiftKind::OutputShift => format!("g_c(x) = f(x) + c {:?}", self.direction),
        };
        let dd = d.clone();
        let fam = DirectedFamily::new(name, move |c| -> MapRef {
            match kind {
                ShiftKind::InputShift => Arc::new(Shifted::input(base.clone(), &dd * c)),
                ShiftKind::OutputShift => Arc::new(Shifted::output(base.clone(), &dd * c)),
            }
        });
        Ok(match &self.failure_point {
            None => fam,
            Some(FailurePointDoc::Named(s)) if s == "shift" => {
                if kind != ShiftKind::InputShift {
                    return Err(Error::Malformed("failure_point \"shift\" needs an input_shift family".into()));
                }
                fam.with_failure_point(move |c| &d * c)
            }
            Some(FailurePointDoc::Named(s)) => {
                return Err(Error::Malformed(format!("unknown failure_point `{s}`")));
            }
            Some(FailurePointDoc::Fixed(p)) => {
                let p = DVector::from_vec(p.clone());
                fam.with_failure_point(move |_| p.clone())
            }
        })
    }
}

/// Openness probe specification (real maps only).
#[derive(Debug, Clone, Deserialize)]
pub struct ProbeDoc {
    pub map: Source,
    pub stratification: Source,
    pub k: BoxRegion,
    pub epsilon: f64,
    #[serde(default = "one")]
    pub jet_order: u32,
    #[serde(default)]
    pub src_chart: Option<BoxRegion>,
    #[serde(default)]
    pub tgt_chart: Option<BoxRegion>,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub directed: Option<DirectedDoc>,
}

fn one() -> u32 {
    1
}

fn default_count() -> usize {
    200
}

pub struct ProbeInput {
    pub spec: WeakNeighborhoodSpec,
    pub sigma: Stratification,
    pub count: usize,
    pub seed: Option<u64>,
    pub directed: Option<DirectedFamily>,
}

impl ProbeDoc {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn build(&self, base: &Path) -> Result<ProbeInput> {
        let (mv, _, mo) = self.map.resolve(base, "map")?;
        if peek_field(&mv)? != Field::Real {
            return Err(Error::InvalidOperands("neighbourhood probes take real maps".into()));
        }
        let f: MapRef = Arc::new(from_value::<PolynomialMap>(mv, &mo)?);
        let (sv, _, so) = self.stratification.resolve(base, "stratification")?;
        let sigma: Stratification = stratification_from_value(sv, &so)?;
        let src = Chart::new("U", self.src_chart.clone().unwrap_or(BoxRegion::unbounded(f.source_dim())));
        let tgt = Chart::new("V", self.tgt_chart.clone().unwrap_or(BoxRegion::unbounded(f.target_dim())));
        let spec = WeakNeighborhoodSpec::new(f.clone(), src, tgt, self.k.clone(), self.epsilon, self.jet_order)?;
        let directed = self.directed.as_ref().map(|d| d.family(f)).transpose()?;
        Ok(ProbeInput {
            spec,
            sigma,
            count: self.count,
            seed: self.seed,
            directed,
        })
    }
}

/// Directory containing `path`, for resolving relative references.
pub fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}
