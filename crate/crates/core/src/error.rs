use thiserror::Error;

/// Errors raised across the library.
///
/// The variants line up with the CLI exit-code vocabulary: argument and
/// parameter problems are usage errors, `Unrecoverable` means too many
/// workers straggled, and the two integrity variants flag numerical decode
/// failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("inadmissible parameters: {0}")]
    Parameter(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("unrecoverable: {stage}: received {received} responses, need {needed}")]
    Unrecoverable {
        stage: String,
        received: usize,
        needed: usize,
    },

    #[error("decode integrity check failed: {0}")]
    DecodeIntegrity(String),

    #[error("reconstruction integrity check failed: imaginary residue {residue:e} exceeds {threshold:e}")]
    ReconstructionIntegrity { residue: f64, threshold: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
