use thiserror::Error;

use crate::report::VerificationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("derivative order exhausted (jet of order 0 cannot be differentiated)")]
    OrderExhausted,

    #[error("jet has zero constant term and is not invertible")]
    ZeroConstantTerm,

    #[error("valence mismatch: {0}")]
    ValenceMismatch(String),

    #[error("{what} out of range: {value}")]
    InvalidIndex { what: &'static str, value: usize },

    #[error("metric is singular at the base point")]
    SingularMetric,

    #[error("basic equation residual is nonzero")]
    NonzeroResidual,

    #[error("instance synthesis failed: {0}")]
    Synthesis(String),

    #[error("trials must be at least 1")]
    InvalidTrials,

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("parse error at {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("index discipline: {0}")]
    IndexDiscipline(String),

    #[error("unbound name `{0}`")]
    Unbound(String),

    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("identity check `{}` failed", .0.check)]
    IdentityFailed(Box<VerificationReport>),

    #[error("malformed input: {0}")]
    Malformed(String),
}
