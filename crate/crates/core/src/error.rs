use thiserror::Error;

/// Errors raised by the geometry, solver and diagnostic layers.
///
/// Numeric payloads are carried as `f64` regardless of the scalar type used
/// by the computation, so the error type stays non-generic.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("domain would be empty: delta {delta} >= inradius {inradius}")]
    EmptyDomain { delta: f64, inradius: f64 },
    #[error("expanded domain leaves no complement with interior (opening {opening})")]
    ComplementPolar { opening: f64 },
    #[error("point lies outside the closed domain (excess {excess})")]
    OutsideDomain { excess: f64 },
    #[error("degenerate weight: beta^2 w^2 + |w'|^2 = 0 with p = {p} < 2")]
    DegenerateWeight { p: f64 },
    #[error("integrator failed at theta = {theta}: {reason}")]
    IntegratorError { theta: f64, reason: String },
    #[error("no sign change for branch exponent in [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },
    #[error("monotonicity violated at index {index}: {detail}")]
    MonotonicityViolation { index: usize, detail: String },
    #[error("mesh error: {0}")]
    MeshError(String),
    #[error("inverse iteration stagnated after {iterations} iterations (change {change})")]
    EigenIterError { iterations: usize, change: f64 },
    #[error("Picard iteration did not converge after {iterations} iterations (change {change})")]
    PicardError { iterations: usize, change: f64 },
    #[error("negative exponent gap {gap} exceeds tolerance {tol}")]
    NegativeGap { gap: f64, tol: f64 },
    #[error("nonpositive interior value {value} at node {node}")]
    PositivityError { node: usize, value: f64 },
    #[error("cone solve failed: {0}")]
    ConeSolveError(String),
    #[error("decay fit failed: {0}")]
    FitError(String),
    #[error("value {value} outside the admissible range ({lo}, {hi})")]
    RangeError { value: f64, lo: f64, hi: f64 },
    #[error("oscillation contraction failed: {0}")]
    ContractionFailure(String),
    #[error("nondegeneracy band blow-up: {0}")]
    NondegeneracyFailure(String),
    #[error("linear solver: {0}")]
    LinearSolve(String),
    #[error("configuration error: {0}")]
    ConfigError(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Variant name, for machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "InvalidParams",
            Error::InvalidDomain(_) => "InvalidDomain",
            Error::EmptyDomain { .. } => "EmptyDomain",
            Error::ComplementPolar { .. } => "ComplementPolar",
            Error::OutsideDomain { .. } => "OutsideDomain",
            Error::DegenerateWeight { .. } => "DegenerateWeight",
            Error::IntegratorError { .. } => "IntegratorError",
            Error::BracketFailure { .. } => "BracketFailure",
            Error::MonotonicityViolation { .. } => "MonotonicityViolation",
            Error::MeshError(_) => "MeshError",
            Error::EigenIterError { .. } => "EigenIterError",
            Error::PicardError { .. } => "PicardError",
            Error::NegativeGap { .. } => "NegativeGap",
            Error::PositivityError { .. } => "PositivityError",
            Error::ConeSolveError(_) => "ConeSolveError",
            Error::FitError(_) => "FitError",
            Error::RangeError { .. } => "RangeError",
            Error::ContractionFailure(_) => "ContractionFailure",
            Error::NondegeneracyFailure(_) => "NondegeneracyFailure",
            Error::LinearSolve(_) => "LinearSolve",
            Error::ConfigError(_) => "ConfigError",
            Error::Parse(_) => "Parse",
        }
    }
}
