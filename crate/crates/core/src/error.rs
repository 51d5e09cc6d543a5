use std::path::PathBuf;

use thiserror::Error;

use crate::event::Maneuver;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unrecognized gaze zone label `{0}`")]
    UnknownZoneLabel(String),

    #[error("unrecognized maneuver kind `{0}`")]
    UnknownManeuver(String),

    #[error("window is empty")]
    EmptyWindow,

    #[error("window of {len} frames is too short: {what} needs at least {min}")]
    WindowTooShort {
        what: &'static str,
        len: usize,
        min: usize,
    },

    #[error("debounce window W = {w} is invalid for a window of {len} frames (need 1 <= W < N)")]
    InvalidDebounce { w: usize, len: usize },

    #[error("window length mismatch: expected {expected} frames, got {actual}")]
    WindowLength { expected: usize, actual: usize },

    #[error("window [{start}, {end}) lies outside a scanpath of {len} frames")]
    WindowOutOfBounds { start: usize, end: usize, len: usize },

    #[error("invalid feature configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid scanpath: {0}")]
    InvalidScanpath(String),

    #[error("invalid event: {0}")]
    InvalidEvent(String),

    #[error("event {event} lacks sweep margin: {reason}")]
    InsufficientMargin { event: String, reason: String },

    #[error("need at least {min} samples to fit a model, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("training samples were computed under different feature configurations")]
    MixedConfigs,

    #[error("sample labelled {found} given to the {expected} model")]
    LabelMismatch { expected: Maneuver, found: Maneuver },

    #[error("dimension mismatch: model expects {expected}, feature has {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("feature configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("regularized covariance of the {label} model is not positive definite (eigenvalues in [{min_eigenvalue:e}, {max_eigenvalue:e}])")]
    NotPositiveDefinite {
        label: Maneuver,
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("no behavior models supplied")]
    NoModels,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("{0}")]
    Protocol(String),

    #[error("{scope}: {count} training events for {class}, need at least 2")]
    InsufficientTraining {
        scope: String,
        class: Maneuver,
        count: usize,
    },

    #[error("invalid noise channel: {0}")]
    InvalidChannel(String),

    #[error("invalid behavior template: {0}")]
    InvalidTemplate(String),

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
