//! Crate-wide error type.

/// Errors surfaced by graph evaluation, training, and the classical solvers.
#[derive(Debug, thiserror::Error)]
pub enum CoreError {
    /// An input slice had the wrong length for the object it was fed to.
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A gradient was requested for an expression with more than one output.
    #[error("loss expression must have exactly one output, found {0}")]
    NonScalarLoss(usize),

    /// A second-order derivative was requested at a kink (|z| at z = 0).
    #[error("second derivative of {op} is singular at node {node} (argument is exactly 0)")]
    SingularDerivative { node: usize, op: &'static str },

    /// A NaN or infinity appeared during training.
    #[error("non-finite {what} at iteration {iteration}, component {index}")]
    NonFinite {
        what: &'static str,
        iteration: u64,
        index: usize,
    },

    /// The adaptive integrator could not meet its tolerance.
    #[error("step size underflow at t = {t:e} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    /// A series evaluation lost all significance (overflow or cancellation).
    #[error("series evaluation unstable: {0}")]
    SeriesUnstable(String),

    /// A sample or query point fell outside the problem domain.
    #[error("point outside domain: {0}")]
    OutOfDomain(String),

    /// An excitation record was queried outside its tabulated time span.
    #[error("excitation time {t} outside tabulated range [{lo}, {hi}]")]
    ExcitationRange { t: f64, lo: f64, hi: f64 },

    /// A standard deviation was not strictly positive.
    #[error("standard deviation must be strictly positive, got {0}")]
    NonPositiveSigma(f64),

    /// A configuration value was rejected.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A checkpoint file was malformed or of an unsupported version.
    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
