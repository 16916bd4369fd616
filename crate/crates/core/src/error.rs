use thiserror::Error;

/// Everything that can go wrong in the library.
///
/// Each variant carries a stable machine-readable code (see [`Error::code`])
/// so front ends can report failures without parsing messages.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("t = {t} is outside the cgf domain ({side} bound {bound})")]
    Domain { t: f64, side: &'static str, bound: f64 },

    #[error("rate is infinite: s = {s} is not below the right endpoint {s_inf}")]
    RateInfinite { s: f64, s_inf: f64 },

    #[error("capability error: {0}")]
    Capability(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error(
        "requested precision {requested:e} not achievable (bound {achieved:e}); {suggestion}"
    )]
    PrecisionNotAchievable {
        achieved: f64,
        requested: f64,
        suggestion: String,
    },

    #[error("numerical failure: {message} (achieved tolerance {achieved:e})")]
    Numeric { message: String, achieved: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("resource limit: {0}")]
    Resource(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Schema(_) => "schema",
            Error::Degenerate(_) => "degenerate_distribution",
            Error::Domain { .. } => "domain",
            Error::RateInfinite { .. } => "rate_infinite",
            Error::Capability(_) => "capability",
            Error::Consistency(_) => "consistency",
            Error::PrecisionNotAchievable { .. } => "precision_not_achievable",
            Error::Numeric { .. } => "numeric",
            Error::Argument(_) => "argument",
            Error::Resource(_) => "resource",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
