//! Driver gaze dynamics: glance descriptors over gaze-zone label streams,
//! per-maneuver Gaussian behavior models, and lane-change prediction from
//! sliding windows.
//!
//! - [`zone`], [`scanpath`], [`event`], [`config`], [`dataset`]: domain types
//! - [`features`]: gaze accumulation, glance frequency and glance duration
//! - [`behavior`]: model fitting, Mahalanobis scoring and classification
//! - [`eval`]: accumulation metrics, sweeps, recall curves, LODO-CV
//! - [`synth`]: synthetic corpora and the label noise channel
//! - [`io`]: file formats

pub mod behavior;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod event;
pub mod features;
pub mod io;
pub mod scanpath;
pub mod synth;
pub mod zone;

pub use behavior::{classify, fit_behavior_model, BehaviorModel, Classification};
pub use config::{FeatureConfig, FeatureMode};
pub use dataset::{Corpus, Drive, GazeSource};
pub use error::{Error, Result};
pub use event::{Maneuver, ManeuverEvent};
pub use features::{assemble_features, GlanceFeatureVector, GlanceSegments};
pub use scanpath::{Scanpath, ScanpathId, ScanpathWindow};
pub use zone::{canonical_zone_order, parse_zone_label, GazeZone, ZONE_COUNT};
