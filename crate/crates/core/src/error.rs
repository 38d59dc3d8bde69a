use thiserror::Error;

/// Errors produced by simulation, reconstruction and file handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("invalid impulse response: {0}")]
    InvalidIrf(String),

    #[error("calibration impossible: no pixel has positive reflectivity")]
    CalibrationImpossible,

    #[error("invalid calibration target: {0}")]
    InvalidTarget(String),

    #[error("invalid scale: {0}")]
    InvalidScale(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A file did not match its declared format. `field` names the offending
    /// header field or payload section.
    #[error("malformed {format} file: {field}: {detail}")]
    Format {
        format: &'static str,
        field: &'static str,
        detail: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
