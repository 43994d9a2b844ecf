use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An input is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Vector/matrix dimensions do not match the model.
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// A numeric computation produced a non-finite or unusable result.
    #[error("numeric error: {what}{}", t.map(|t| format!(" at t = {t}")).unwrap_or_default())]
    Numeric { what: String, t: Option<f64> },

    /// Invalid configuration (bad field value, missing section, ...).
    #[error("config error: {0}")]
    Config(String),

    /// Two runs were compared that do not share the same scenario geometry.
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn numeric(what: impl Into<String>) -> Self {
        Error::Numeric {
            what: what.into(),
            t: None,
        }
    }

    pub fn numeric_at(what: impl Into<String>, t: f64) -> Self {
        Error::Numeric {
            what: what.into(),
            t: Some(t),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
