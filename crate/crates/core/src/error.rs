use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("non-finite value in {what} at point {point}, component {component}")]
    NonFinite {
        what: &'static str,
        point: usize,
        component: usize,
    },

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("spectral coefficients are not Hermitian-symmetric (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("unknown potential `{0}`")]
    UnknownPotential(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("potential has no claimed gradient bound")]
    MissingBound,

    #[error("invalid solver options: {0}")]
    InvalidOptions(String),

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
