use thiserror::Error;

/// Error type shared by all engine modules.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum PhaseError {
    #[error("algebra context mismatch: {0}")]
    ContextMismatch(String),

    #[error("invalid context: {0}")]
    InvalidContext(String),

    #[error("expected real coefficients: {0}")]
    NonRealCoefficients(String),

    #[error("degree {found} exceeds limit {limit}: {what}")]
    DegreeTooHigh {
        what: String,
        found: i64,
        limit: i64,
    },

    #[error("Fock cutoff {cutoff} too small: {why}")]
    CutoffTooSmall { cutoff: usize, why: String },

    #[error("Fock cutoff escalation exceeded cap {cap}: tail mass {tail:.3e} above threshold")]
    CutoffCapExceeded { cap: usize, tail: f64 },

    #[error("state is not physical: {0}")]
    NonPhysicalState(String),

    #[error("moment system is open over the requested index set: {0}")]
    OpenSystem(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no witness in search family for the given Hamiltonian")]
    NoWitness,

    #[error("insufficient samples: need at least {need}, got {got}")]
    InsufficientSamples { need: usize, got: usize },

    #[error("rejection envelope construction failed: {0}")]
    EnvelopeFailure(String),

    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("2*hbar = {value} is not a perfect rational square; ladder aliases unavailable")]
    NonSquareHbar { value: String },
}
