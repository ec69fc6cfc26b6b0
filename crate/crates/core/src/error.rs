use thiserror::Error;

use crate::image_io::PgmError;
use crate::jpegls::JpeglsError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("{size}x{size} footprint at ({x}, {y}) exceeds the {width}x{height} raster")]
    OutOfBounds {
        x: usize,
        y: usize,
        size: usize,
        width: usize,
        height: usize,
    },

    #[error("unsupported block size {0} (expected 4 or 8)")]
    UnsupportedBlockSize(usize),

    #[error("ground-truth mask has no ROI pixels")]
    EmptyGroundTruth,

    #[error("need at least {needed} finite points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error(transparent)]
    Pgm(#[from] PgmError),

    #[error(transparent)]
    Jpegls(#[from] JpeglsError),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
