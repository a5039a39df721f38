use thiserror::Error;

/// Errors produced by the library and the CLI front end.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An approximate spectrum has colliding or non-positive eigenvalues; the
    /// caller should fall back to the exact eigendecomposition path.
    #[error("degenerate spectrum: {0} (use the exact eigendecomposition path)")]
    DegenerateSpectrum(String),

    #[error("trained covariance block is singular even after regularization")]
    SingularConditioning,

    /// The conditional variance is zero, so the channel is known exactly and
    /// its power must be compared against the threshold directly.
    #[error("deterministic channel: conditional variance is zero")]
    DeterministicChannel,

    #[error("beamformer undefined: trained channel is identically zero")]
    UndefinedBeamformer,

    #[error("surrogate training diverged at epoch {epoch}: {detail}")]
    TrainingFailure { epoch: usize, detail: String },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("model file error: {0}")]
    ModelFormat(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
