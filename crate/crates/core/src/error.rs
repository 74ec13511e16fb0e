use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// A nonlinearity was evaluated at a negative argument.
    #[error("nonlinearity evaluated at negative argument x = {x}")]
    NegativeArgument { x: f64 },

    /// An evaluator returned a value outside [0, inf).
    #[error("evaluator produced invalid value {value} at x = {x}: {context}")]
    InvalidValue {
        x: f64,
        value: f64,
        context: &'static str,
    },

    /// Expression parsing failed.
    #[error("syntax error at offset {position}: {message}")]
    Parse { message: String, position: usize },

    /// A requested quantity needs a limit that could not be classified.
    #[error("asymptotic quotient of {which} is undetermined; classification refused")]
    UndeterminedLimit {
        which: String,
        /// (probe, quotient) samples that failed to classify.
        evidence: Vec<(f64, f64)>,
    },

    /// Arguments violate a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A quotient that the requested estimate assumes bounded grew without bound.
    #[error("quotient of {which} is unbounded over the search range; regime conditions do not hold")]
    UnboundedQuotient { which: String },

    /// An iterate or integrand stopped being finite.
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    /// A verified solution landed inside a certified nonexistence window.
    #[error("regime contradiction: {0}")]
    RegimeContradiction(String),
}

pub type Result<T> = std::result::Result<T, Error>;
