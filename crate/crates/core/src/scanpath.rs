use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::zone::{GazeZone, ZONE_COUNT};

/// Identity of the drive a scanpath came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScanpathId {
    pub driver_id: String,
    pub drive_id: String,
}

impl ScanpathId {
    pub fn new(driver_id: impl Into<String>, drive_id: impl Into<String>) -> Self {
        ScanpathId {
            driver_id: driver_id.into(),
            drive_id: drive_id.into(),
        }
    }
}

impl fmt::Display for ScanpathId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.driver_id, self.drive_id)
    }
}

/// A frame-rate sequence of gaze-zone labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scanpath {
    id: ScanpathId,
    fps: u32,
    zones: Vec<GazeZone>,
}

impl Scanpath {
    pub fn new(id: ScanpathId, fps: u32, zones: Vec<GazeZone>) -> Result<Self> {
        if fps == 0 {
            return Err(Error::InvalidScanpath("fps must be positive".into()));
        }
        if zones.is_empty() {
            return Err(Error::InvalidScanpath(format!("scanpath {id} has no frames")));
        }
        Ok(Scanpath { id, fps, zones })
    }

    pub fn id(&self) -> &ScanpathId {
        &self.id
    }

    pub fn fps(&self) -> u32 {
        self.fps
    }

    pub fn zones(&self) -> &[GazeZone] {
        &self.zones
    }

    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    /// Duration in seconds, `N / fps`.
    pub fn duration(&self) -> f64 {
        self.zones.len() as f64 / self.fps as f64
    }

    /// Per-label frame counts, `Unknown` in slot 9.
    pub fn label_counts(&self) -> [usize; ZONE_COUNT + 1] {
        let mut counts = [0; ZONE_COUNT + 1];
        for z in &self.zones {
            counts[z.label_index()] += 1;
        }
        counts
    }

    pub fn window(&self, range: Range<usize>) -> Result<ScanpathWindow<'_>> {
        if range.start > range.end || range.end > self.zones.len() {
            return Err(Error::WindowOutOfBounds {
                start: range.start,
                end: range.end,
                len: self.zones.len(),
            });
        }
        Ok(ScanpathWindow {
            zones: &self.zones[range.clone()],
            fps: self.fps,
            range,
            source: &self.id,
        })
    }

    /// The whole scanpath as one window.
    pub fn as_window(&self) -> ScanpathWindow<'_> {
        ScanpathWindow {
            zones: &self.zones,
            fps: self.fps,
            range: 0..self.zones.len(),
            source: &self.id,
        }
    }

    pub fn with_zones(&self, zones: Vec<GazeZone>) -> Result<Scanpath> {
        if zones.len() != self.zones.len() {
            return Err(Error::LengthMismatch(self.zones.len(), zones.len()));
        }
        Ok(Scanpath {
            id: self.id.clone(),
            fps: self.fps,
            zones,
        })
    }
}

/// A borrowed `[start, end)` slice of a scanpath.
#[derive(Debug, Clone)]
pub struct ScanpathWindow<'a> {
    pub zones: &'a [GazeZone],
    pub fps: u32,
    pub range: Range<usize>,
    pub source: &'a ScanpathId,
}

impl ScanpathWindow<'_> {
    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.zones.len() as f64 / self.fps as f64
    }
}
