use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::camera::CameraError;
use crate::chips::ChipFormatError;
use crate::frame::FrameError;
use crate::rll::RllError;
use crate::rx::RxError;

/// Crate-level error; each module also exposes its own narrower error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Rll(#[from] RllError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Rx(#[from] RxError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    ChipFormat(#[from] ChipFormatError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
