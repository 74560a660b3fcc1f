use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("integer overflow computing {0}")]
    Overflow(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("index {index} outside window [{start}, {end}]")]
    Index { index: u64, start: u64, end: u64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    /// Weighted series over the envelope diverges.
    #[error("non-summable envelope: weight exponent {weight} against {envelope}")]
    NonSummable { weight: f64, envelope: String },

    /// Weighted improper integral over the envelope diverges.
    #[error("non-integrable envelope: weight exponent {weight} against {envelope}")]
    NonIntegrable { weight: f64, envelope: String },

    /// The envelope is asserted only from `valid_from`, which starts after the tail.
    #[error("envelope valid from {valid_from} does not cover tail starting at {tail_start}")]
    EnvelopeNotValid { valid_from: f64, tail_start: f64 },

    #[error("quadrature on [{a}, {b}] reached error {error:.3e} above tolerance {tol:.3e} (best value {value})")]
    Precision {
        a: f64,
        b: f64,
        value: f64,
        error: f64,
        tol: f64,
    },

    /// An iterate left the domain U where |f| <= M is asserted.
    #[error("domain violation at {at}: value {value} outside {domain}")]
    DomainViolation {
        at: f64,
        value: f64,
        domain: String,
    },
}
