//! Crate-wide error type.
//!
//! Every fallible operation returns [`Result`]. Variants are deliberately
//! specific so callers (and the CLI) can distinguish contract violations from
//! runtime failures such as an exhausted example stream.

use thiserror::Error;

/// Alias for `std::result::Result` with this crate's [`Error`].
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the workbench.
#[derive(Debug, Error)]
pub enum Error {
    /// Two vectors that must share a length do not.
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// A scalar or structural argument is outside its documented range.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A probability vector failed validation.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// An instance exceeds the cap for an exact (exhaustive) routine.
    #[error("class of size {size} exceeds the exact-mode cap {cap}; use the greedy mode")]
    ClassTooLarge { size: usize, cap: usize },

    /// A caller-stated precondition does not hold for the given inputs.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The adversarial oracle was queried with an empty version space.
    #[error("version space is empty; the adversary has no consistent concept left")]
    EmptyVersionSpace,

    /// A boosting round produced an all-zero weight vector.
    #[error("degenerate boosting round: every point has zero weight at round {round}")]
    DegenerateRound { round: usize },

    /// The simulated normalizer of a reweighted distribution came out nonpositive.
    #[error("degenerate simulation: estimated normalizer {z_hat} is not positive")]
    DegenerateSimulation { z_hat: f64 },

    /// An example stream ended before the consumer was done.
    #[error("example stream exhausted after {consumed} draws ({context})")]
    StreamExhausted { consumed: u64, context: String },

    /// No concept in the class passed the properization agreement test.
    #[error("properization failed: no class member agrees on {threshold} of {n} test points")]
    NoConsistentConcept { threshold: u64, n: u64 },

    /// Identification found no candidate within the loss threshold.
    #[error("identification failed: no witness member within loss {threshold}")]
    IdentificationFailed { threshold: f64 },

    /// Identification found more than one candidate within the loss threshold.
    #[error(
        "ambiguous identification: members {first} and {second} are both within loss {threshold}"
    )]
    AmbiguousIdentification {
        first: usize,
        second: usize,
        threshold: f64,
    },

    /// A streaming learner's state exceeded its declared width.
    #[error("state width violation at step {step}: declared {declared} bits, observed {observed}")]
    StateWidthViolation {
        step: u64,
        declared: u64,
        observed: u64,
    },

    /// A parse error in one of the text or JSON interchange formats.
    #[error("format error: {0}")]
    Format(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Shorthand for [`Error::InvalidParameter`].
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
