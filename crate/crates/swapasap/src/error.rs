//! Error types shared across the library.

use thiserror::Error;

/// Everything that can go wrong in the numeric pipelines.
///
/// `NearSingularParameters` is recoverable: the public entry points of the
/// recursion and generating-function modules retry once with a nudged lambda
/// before surfacing it.
#[derive(Debug, Clone, Error)]
pub enum NoiseError {
    /// A closed-form coefficient or linear-form denominator came within 1e-9
    /// of zero. Carries the offending factor value and where it appeared.
    #[error("near-singular parameters: |{factor:.3e}| < 1e-9 in {context}")]
    NearSingularParameters { factor: f64, context: &'static str },

    /// A q-hypergeometric partial sum failed to satisfy the truncation rule
    /// within the term cap.
    #[error("series did not converge within {terms} terms (last |term| {last_term:.3e})")]
    SeriesDivergence { terms: usize, last_term: f64 },

    /// The sign-change scan for a dominant pole ran past its upper limit.
    #[error("no sign change of the pole equation up to x = {x_up:.3e}")]
    RootNotBracketed { x_up: f64 },

    /// A computation would exceed a configured size cap (enumeration count,
    /// pmf length, oracle dimension).
    #[error("resource limit: {what} = {requested} exceeds cap {cap}")]
    ResourceLimit {
        what: &'static str,
        requested: u64,
        cap: u64,
    },

    /// An inverse Fourier transform did not yield a probability distribution.
    #[error("lambda vector is not a channel: {reason} (worst offender {value:.3e})")]
    NotAChannel { reason: &'static str, value: f64 },

    /// A parameter failed its domain check at construction.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, NoiseError>;
