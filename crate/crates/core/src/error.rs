use alloc::string::String;

/// Errors raised by the series machinery.
///
/// Every variant maps to a stable machine-readable code through
/// [`Error::code`], which the command-line front end prints verbatim.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("division by a zero signed-log value")]
    DivisionByZero,

    #[error("gamma argument is within 1e-12 of the pole at -{0}")]
    GammaPole(u64),

    #[error("sine denominator vanishes at j = {j}; alpha is numerically rational")]
    NearRationalAlpha { j: u64 },

    #[error("reduced argument at l = {l} lies within 1e-14 of a pole")]
    Singularity { l: u64 },

    #[error("requested convergent index {requested} but only {available} quotients are available")]
    DepthExceedsExpansion { requested: usize, available: usize },

    #[error("denominator needs {bits} bits, exceeding the budget of {budget}")]
    BitBudget { bits: u64, budget: u64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("Re(s) = {re} lies outside the strip ({lo}, {hi})")]
    OutsideStrip { re: f64, lo: f64, hi: f64 },

    #[error("s is within {distance:e} of a zero or pole of the {factor} factor")]
    NearSingularPoint { factor: &'static str, distance: f64 },

    #[error("cannot parse real number: {0}")]
    Parse(String),

    #[error("implied skewness |beta| = {beta} exceeds 1")]
    SkewnessBridge { beta: f64 },

    #[error("quantile bracket search failed for u = {u}")]
    Bracket { u: f64 },
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::DivisionByZero => "E_DIV_ZERO",
            Error::GammaPole(_) => "E_GAMMA_POLE",
            Error::NearRationalAlpha { .. } => "E_NEAR_RATIONAL",
            Error::Singularity { .. } => "E_SINGULARITY",
            Error::DepthExceedsExpansion { .. } => "E_DEPTH",
            Error::BitBudget { .. } => "E_BIT_BUDGET",
            Error::InvalidParams(_) => "E_PARAMS",
            Error::Domain(_) => "E_DOMAIN",
            Error::Hypothesis(_) => "E_HYPOTHESIS",
            Error::OutsideStrip { .. } => "E_STRIP",
            Error::NearSingularPoint { .. } => "E_NEAR_SINGULAR",
            Error::Parse(_) => "E_PARSE",
            Error::SkewnessBridge { .. } => "E_BRIDGE",
            Error::Bracket { .. } => "E_BRACKET",
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
