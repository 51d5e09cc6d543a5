use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::seconds_to_frames;
use crate::zone::ZONE_COUNT;

/// Which descriptors make up a feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureMode {
    /// Gaze accumulation.
    #[serde(rename = "GA")]
    Accumulation,
    /// Glance duration.
    #[serde(rename = "GD")]
    Duration,
    /// Glance duration followed by glance frequency.
    #[serde(rename = "GD_GF")]
    DurationFrequency,
}

impl FeatureMode {
    pub const ALL: [FeatureMode; 3] = [
        FeatureMode::Accumulation,
        FeatureMode::Duration,
        FeatureMode::DurationFrequency,
    ];

    pub fn dimension(self) -> usize {
        match self {
            FeatureMode::Accumulation | FeatureMode::Duration => ZONE_COUNT,
            FeatureMode::DurationFrequency => 2 * ZONE_COUNT,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            FeatureMode::Accumulation => "GA",
            FeatureMode::Duration => "GD",
            FeatureMode::DurationFrequency => "GD_GF",
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['_', '-', '+'], "").as_str() {
            "ga" => Ok(FeatureMode::Accumulation),
            "gd" => Ok(FeatureMode::Duration),
            "gdgf" => Ok(FeatureMode::DurationFrequency),
            _ => Err(Error::InvalidConfig(format!("unknown feature mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub mode: FeatureMode,
    pub window_seconds: f64,
    /// Debounce window W in frames.
    pub debounce_w: usize,
    pub ridge_epsilon: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            mode: FeatureMode::Accumulation,
            window_seconds: 5.0,
            debounce_w: 6,
            ridge_epsilon: 1e-6,
        }
    }
}

impl FeatureConfig {
    pub fn with_mode(mode: FeatureMode) -> Self {
        FeatureConfig {
            mode,
            ..Default::default()
        }
    }

    pub fn dimension(&self) -> usize {
        self.mode.dimension()
    }

    pub fn window_frames(&self, fps: u32) -> usize {
        seconds_to_frames(self.window_seconds, fps)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.window_seconds.is_finite() && self.window_seconds > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "window_seconds must be positive, got {}",
                self.window_seconds
            )));
        }
        if self.debounce_w == 0 {
            return Err(Error::InvalidConfig("debounce_w must be at least 1".into()));
        }
        if !(self.ridge_epsilon.is_finite() && self.ridge_epsilon >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "ridge_epsilon must be nonnegative, got {}",
                self.ridge_epsilon
            )));
        }
        Ok(())
    }

    /// Checks that features computed under `self` can be scored by a model
    /// fitted under `other`. The ridge is a model property and is not compared.
    pub fn check_compatible(&self, other: &FeatureConfig) -> Result<()> {
        if self.mode != other.mode {
            return Err(Error::ConfigMismatch(format!(
                "feature mode {} vs {}",
                self.mode, other.mode
            )));
        }
        if self.window_seconds != other.window_seconds {
            return Err(Error::ConfigMismatch(format!(
                "window {} s vs {} s",
                self.window_seconds, other.window_seconds
            )));
        }
        if self.mode != FeatureMode::Accumulation && self.debounce_w != other.debounce_w {
            return Err(Error::ConfigMismatch(format!(
                "debounce W {} vs {}",
                self.debounce_w, other.debounce_w
            )));
        }
        Ok(())
    }
}
