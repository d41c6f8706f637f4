use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown outcome label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate outcome label `{0}`")]
    DuplicateLabel(String),
    #[error("invalid mass {value} for outcome `{label}`")]
    InvalidMass { label: String, value: f64 },
    #[error("masses sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("evidence has zero probability")]
    ZeroEvidence,
    #[error("blocks overlap at outcome `{0}`")]
    PartitionOverlap(String),
    #[error("blocks do not cover outcome `{0}`")]
    PartitionGap(String),
    #[error("observable has no value for outcome `{0}`")]
    Totality(String),
    #[error("outcome label `{0}` is not a decimal numeral")]
    NonNumericLabel(String),
    #[error("index {index} out of range for {len} factors")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("matrix row `{row}` is not stochastic: {reason}")]
    NotStochastic { row: String, reason: String },
    #[error("generator row `{row}` is invalid: {reason}")]
    NotGenerator { row: String, reason: String },
    #[error("invalid probability vector: {0}")]
    NotProbVector(String),
    #[error("state labels do not line up: expected {expected:?}, found {found:?}")]
    Alignment {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("expected a {expected} vector, found a {found} vector")]
    Orientation {
        expected: &'static str,
        found: &'static str,
    },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },
    #[error("stationary distribution is not unique")]
    NonUnique,
    #[error("{0}")]
    Domain(String),
    #[error("quadrature did not converge: estimate {estimate}, error bound {error:e}")]
    Integration { estimate: f64, error: f64 },
    #[error("integral does not converge absolutely (last estimate {estimate})")]
    Divergence { estimate: f64 },
    #[error("probability vector left the simplex by {violation:e}")]
    SimplexViolation { violation: f64 },
    #[error("syntax error at {line}:{column}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        line: usize,
        column: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("unresolved name `{0}`")]
    Unresolved(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("model error: {0}")]
    Model(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
