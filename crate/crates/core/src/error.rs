use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("index {index} outside noise path range [{lo}, {hi}]")]
    Range { index: i64, lo: i64, hi: i64 },

    #[error("gap condition violated: {label} = {value}")]
    Gap { label: String, value: f64 },

    #[error("divergence at step {step}: {what}")]
    Divergence { step: i64, what: String },

    #[error("singular step operator: {0}")]
    Singular(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("statistics unavailable: {0}")]
    Statistics(String),

    #[error("assembly failed: {0}")]
    Assembly(String),

    #[error("resonance: denominator {0} vanishes")]
    Resonance(String),

    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("malformed noise file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter { name, reason: reason.into() }
}

impl Error {
    /// Process exit status: 2 configuration, 3 numerical divergence, 4 gap or admissibility.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Parameter { .. } | Error::Shape { .. } => 2,
            Error::Divergence { .. } | Error::Singular(_) => 3,
            Error::Gap { .. } | Error::Resonance(_) => 4,
            _ => 1,
        }
    }
}
