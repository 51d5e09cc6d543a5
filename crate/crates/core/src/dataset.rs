use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{EventAnchor, ManeuverEvent};
use crate::scanpath::{Scanpath, ScanpathId};

/// Which gaze stream features are computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GazeSource {
    /// Per-frame human annotation (ground truth).
    Annotated,
    /// Output of the gaze-zone estimator.
    Estimated,
}

impl fmt::Display for GazeSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GazeSource::Annotated => "annotated",
            GazeSource::Estimated => "estimated",
        })
    }
}

impl FromStr for GazeSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "annotated" | "truth" | "ground-truth" => Ok(GazeSource::Annotated),
            "estimated" | "estimate" => Ok(GazeSource::Estimated),
            _ => Err(Error::InvalidConfig(format!("unknown gaze source `{s}`"))),
        }
    }
}

/// One drive: the estimated gaze stream, an optional annotated stream of
/// the same length, and the events marked in it.
#[derive(Debug, Clone, PartialEq)]
pub struct Drive {
    estimated: Scanpath,
    annotated: Option<Scanpath>,
    events: Vec<ManeuverEvent>,
}

impl Drive {
    pub fn new(estimated: Scanpath, annotated: Option<Scanpath>, events: Vec<ManeuverEvent>) -> Result<Self> {
        if let Some(truth) = &annotated {
            if truth.len() != estimated.len() || truth.fps() != estimated.fps() {
                return Err(Error::InvalidScanpath(format!(
                    "annotated stream of {} ({} frames at {} fps) does not align with the estimated stream ({} frames at {} fps)",
                    estimated.id(),
                    truth.len(),
                    truth.fps(),
                    estimated.len(),
                    estimated.fps()
                )));
            }
        }
        let len = estimated.len();
        let mut segments = Vec::new();
        for ev in &events {
            match ev.anchor() {
                EventAnchor::SyncF(f) if f >= len => {
                    return Err(Error::InvalidEvent(format!(
                        "{ev} lies outside drive {} of {len} frames",
                        estimated.id()
                    )))
                }
                EventAnchor::Segment { start, end } => {
                    if end > len {
                        return Err(Error::InvalidEvent(format!(
                            "{ev} lies outside drive {} of {len} frames",
                            estimated.id()
                        )));
                    }
                    segments.push((start, end));
                }
                _ => {}
            }
        }
        segments.sort_unstable();
        if let Some(pair) = segments.windows(2).find(|p| p[1].0 < p[0].1) {
            return Err(Error::InvalidEvent(format!(
                "lane-keeping segments [{}, {}) and [{}, {}) overlap in drive {}",
                pair[0].0,
                pair[0].1,
                pair[1].0,
                pair[1].1,
                estimated.id()
            )));
        }
        Ok(Drive {
            estimated,
            annotated,
            events,
        })
    }

    pub fn id(&self) -> &ScanpathId {
        self.estimated.id()
    }

    pub fn driver_id(&self) -> &str {
        &self.estimated.id().driver_id
    }

    pub fn fps(&self) -> u32 {
        self.estimated.fps()
    }

    pub fn len(&self) -> usize {
        self.estimated.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimated.is_empty()
    }

    pub fn estimated(&self) -> &Scanpath {
        &self.estimated
    }

    pub fn annotated(&self) -> Option<&Scanpath> {
        self.annotated.as_ref()
    }

    pub fn events(&self) -> &[ManeuverEvent] {
        &self.events
    }

    pub fn scanpath(&self, source: GazeSource) -> Result<&Scanpath> {
        match source {
            GazeSource::Estimated => Ok(&self.estimated),
            GazeSource::Annotated => self.annotated.as_ref().ok_or_else(|| {
                Error::Protocol(format!("drive {} has no annotated gaze stream", self.id()))
            }),
        }
    }
}

/// A multi-driver collection of drives.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub drives: Vec<Drive>,
}

impl Corpus {
    pub fn new(drives: Vec<Drive>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for d in &drives {
            if !seen.insert(d.id().clone()) {
                return Err(Error::InvalidScanpath(format!("duplicate drive {}", d.id())));
            }
        }
        Ok(Corpus { drives })
    }

    /// Distinct driver ids, sorted.
    pub fn drivers(&self) -> Vec<String> {
        self.drives
            .iter()
            .map(|d| d.driver_id().to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.drives.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Maneuver;
    use crate::zone::GazeZone;

    fn sp(driver: &str, n: usize) -> Scanpath {
        Scanpath::new(ScanpathId::new(driver, "r1"), 30, vec![GazeZone::Front; n]).unwrap()
    }

    #[test]
    fn rejects_overlapping_lane_keeping() {
        let a = ManeuverEvent::lane_keeping(0, 150, 30).unwrap();
        let b = ManeuverEvent::lane_keeping(100, 250, 30).unwrap();
        assert!(Drive::new(sp("a", 400), None, vec![a, b]).is_err());
        let c = ManeuverEvent::lane_keeping(150, 300, 30).unwrap();
        assert!(Drive::new(sp("a", 400), None, vec![a, c]).is_ok());
    }

    #[test]
    fn rejects_misaligned_truth_and_outside_events() {
        assert!(Drive::new(sp("a", 400), Some(sp("a", 399)), vec![]).is_err());
        let ev = ManeuverEvent::lane_change(Maneuver::LeftLaneChange, 400).unwrap();
        assert!(Drive::new(sp("a", 400), None, vec![ev]).is_err());
    }

    #[test]
    fn drivers_are_sorted_and_unique() {
        let drives = vec![
            Drive::new(sp("b", 10), None, vec![]).unwrap(),
            Drive::new(
                Scanpath::new(ScanpathId::new("a", "r2"), 30, vec![GazeZone::Front; 10]).unwrap(),
                None,
                vec![],
            )
            .unwrap(),
            Drive::new(sp("a", 10), None, vec![]).unwrap(),
        ];
        let c = Corpus::new(drives).unwrap();
        assert_eq!(c.drivers(), vec!["a".to_string(), "b".to_string()]);
        assert!(Corpus::new(vec![Drive::new(sp("a", 10), None, vec![]).unwrap(); 2]).is_err());
    }
}
