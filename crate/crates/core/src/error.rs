use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Format(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sample set is empty")]
    EmptySampleSet,

    #[error("image of size {width}x{height} is smaller than the required {min}x{min}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("the regularizer requires a structure guide")]
    MissingGuide,

    #[error("cost became non-finite at iteration {iteration}; lambda or rho is badly scaled")]
    NonFiniteCost { iteration: usize },

    #[error("no integral pyramid schedule: {0}")]
    IncompatibleSizes(String),

    #[error("consecutive pyramid ratio {ratio} is not inside (1, 2)")]
    RatioOutOfRange { ratio: f64 },

    #[error("schedule does not match the data: {0}")]
    ScheduleMismatch(String),

    #[error("sampling density {0} is outside (0, 1] or selects no pixel")]
    DensityOutOfRange(f64),

    #[error("target SNR of {target_db} dB is unreachable")]
    SnrUnreachable { target_db: f64 },

    #[error("noisy image equals the clean image; SNR is infinite")]
    ZeroNoise,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
