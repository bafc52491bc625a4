use thiserror::Error;

/// Errors raised by the laboratory's operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid point set: {0}")]
    InvalidPointSet(String),

    #[error("point lies in the hull (distance {distance:e} <= tol {tol:e}); no separating functional")]
    NoSeparation { distance: f64, tol: f64 },

    #[error("domain has no interior nodes")]
    EmptyDomain,

    #[error("domain has an empty boundary")]
    EmptyBoundary,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("expression parse error at column {column}: {message}")]
    Parse { column: usize, message: String },

    #[error("non-finite value {value} at ({x}, {y}){}", node.map(|n| format!(" (node {n})")).unwrap_or_default())]
    Eval {
        x: f64,
        y: f64,
        value: f64,
        node: Option<usize>,
    },

    #[error("field has output dimension {got}, operation requires {expected}")]
    Arity { expected: usize, got: usize },

    #[error("finite-difference stencil leaves the domain at ({x}, {y})")]
    Stencil { x: f64, y: f64 },

    #[error("collar of width {width} contains no interior node")]
    CollarTooThin { width: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no certificate: collar/interior gap {gap:e} does not exceed required margin {required:e}")]
    NoCertificate { gap: f64, required: f64 },

    #[error("sublevel sampling insufficient to separate the maximizer: {0}")]
    SamplingInsufficient(String),

    #[error("certificate invalid: {0}")]
    CertificateInvalid(String),

    #[error("precondition rejected: {0}")]
    PreconditionRejected(String),

    #[error("support minimizer at node {node} lies outside X")]
    TheoremViolation { node: usize },

    #[error("preimage count uncertain: Gauss-Newton diverged on all {clusters} clusters")]
    CountUncertain { clusters: usize },

    #[error("hypothesis violated at node {node} ({x}, {y}): value {value:e}")]
    Hypothesis { node: usize, x: f64, y: f64, value: f64 },

    #[error("construction residual {residual:e} at node {node} exceeds 1e-10")]
    ConstructionBug { node: usize, residual: f64 },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
