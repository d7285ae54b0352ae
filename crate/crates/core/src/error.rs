use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid operands: {0}")]
    InvalidOperands(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("subspace is not contained in the outer subspace (residual {residual:.3e})")]
    NotContained { residual: f64 },
    #[error("chart mismatch: image point {point:?} escapes target chart `{chart}`")]
    ChartMismatch { chart: String, point: Vec<f64> },
    #[error("evaluation point {point:?} escapes the map domain")]
    DomainEscape { point: Vec<f64> },
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("singular point on stratum `{stratum}`: {detail}")]
    SingularPoint { stratum: String, detail: String },
    #[error("point is not on stratum `{0}`")]
    NotOnStratum(String),
    #[error("no subspace H fits between T2+W2 and T1+T2+W1+W2: {0}")]
    InfeasibleH(String),
    #[error("not an (a)-fault: {0}")]
    NotAFault(String),
    #[error("dimension hypothesis violated: {0}")]
    DimensionHypothesisViolated(String),
    #[error("basis alignment failed: {0}")]
    AlignmentFailure(String),
    #[error("construction contradiction: {0}")]
    ConstructionContradiction(String),
    #[error("source tangent space is not complex-linear (defect {0:.3e})")]
    NonComplexSubspace(f64),
    #[error("perturbation sampling failed: {0}")]
    SamplingFailure(String),
    #[error("compact set required: {0}")]
    NoncompactSet(String),
    #[error("malformed input: {0}")]
    Malformed(String),
}
