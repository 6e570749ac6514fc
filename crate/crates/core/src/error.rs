use thiserror::Error;

#[derive(Debug, Error)]
pub enum GrammarError {
    /// Geometry or parameters that cannot describe a valid grammar.
    #[error("configuration error: {0}")]
    Config(String),

    /// A kind-specific construction step gave up (e.g. projection resampling).
    #[error("generation error: {0}")]
    Generation(String),

    /// A loaded or constructed value breaks an invariant.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GrammarError>;
