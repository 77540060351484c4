use thiserror::Error;

/// Errors raised by the estimators, builders and verifiers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape: {0}")]
    Shape(String),

    #[error("config: {0}")]
    Config(String),

    #[error("too-large: {size} points after reduction exceeds exact cap {cap}")]
    TooLarge { size: usize, cap: usize },

    #[error("empty: point cloud has no points")]
    Empty,

    /// The orbit left the domain at `step`; `last` is the last point inside it.
    #[error("escaped({step})")]
    Escaped { step: usize, last: Vec<f64> },

    #[error("window: {0}")]
    Window(String),

    #[error("mesh: {0}")]
    Mesh(String),

    #[error("undefined-point({step})")]
    UndefinedPoint { step: usize },

    #[error("not-semiconjugate: residual {residual:e} at sample {index}")]
    NotSemiconjugate { residual: f64, index: usize },

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
