use std::path::PathBuf;

use thiserror::Error;

use crate::image::Colorspace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt image data: {0}")]
    CorruptData(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("expected {expected:?} image, got {actual:?}")]
    InvalidColorspace {
        expected: Colorspace,
        actual: Colorspace,
    },

    #[error("dimension mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    DimensionMismatch {
        left_width: u32,
        left_height: u32,
        right_width: u32,
        right_height: u32,
    },

    #[error("coordinate ({x}, {y}) outside {width}x{height}")]
    OutOfBounds {
        x: i64,
        y: i64,
        width: u32,
        height: u32,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no samples to cluster")]
    EmptyInput,

    #[error("k = {k} exceeds sample count {samples}")]
    KExceedsSamples { k: usize, samples: usize },

    #[error("infeasible scene spec: {0}")]
    InfeasibleSpec(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("no PNG images in {0}")]
    EmptyDirectory(PathBuf),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn dims(left: (u32, u32), right: (u32, u32)) -> Self {
        Error::DimensionMismatch {
            left_width: left.0,
            left_height: left.1,
            right_width: right.0,
            right_height: right.1,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
