use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Behavior classes. Declaration order is the canonical order used for
/// tie-breaking: LLC < RLC < LK.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Maneuver {
    LeftLaneChange,
    RightLaneChange,
    LaneKeeping,
}

impl Maneuver {
    pub const ALL: [Maneuver; 3] = [
        Maneuver::LeftLaneChange,
        Maneuver::RightLaneChange,
        Maneuver::LaneKeeping,
    ];

    pub const LANE_CHANGES: [Maneuver; 2] = [Maneuver::LeftLaneChange, Maneuver::RightLaneChange];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Maneuver::LeftLaneChange => "LLC",
            Maneuver::RightLaneChange => "RLC",
            Maneuver::LaneKeeping => "LK",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Maneuver::LeftLaneChange => "LeftLaneChange",
            Maneuver::RightLaneChange => "RightLaneChange",
            Maneuver::LaneKeeping => "LaneKeeping",
        }
    }

    pub fn is_lane_change(self) -> bool {
        self != Maneuver::LaneKeeping
    }
}

impl fmt::Display for Maneuver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Maneuver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['_', '-', ' '], "");
        Maneuver::ALL
            .into_iter()
            .find(|m| key == m.name().to_ascii_lowercase() || key == m.short_name().to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownManeuver(s.to_string()))
    }
}

/// Where an event sits inside its drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventAnchor {
    /// Lane changes: the frame where the tire touches the lane marking.
    SyncF(usize),
    /// Lane keeping: a `[start, end)` frame span.
    Segment { start: usize, end: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ManeuverEvent {
    kind: Maneuver,
    anchor: EventAnchor,
}

impl ManeuverEvent {
    pub fn lane_change(kind: Maneuver, syncf_frame: usize) -> Result<Self> {
        if !kind.is_lane_change() {
            return Err(Error::InvalidEvent(format!(
                "{kind} events are anchored by a segment, not a SyncF frame"
            )));
        }
        Ok(ManeuverEvent {
            kind,
            anchor: EventAnchor::SyncF(syncf_frame),
        })
    }

    /// A lane-keeping segment; it must span exactly five seconds at `fps`.
    pub fn lane_keeping(start: usize, end: usize, fps: u32) -> Result<Self> {
        let expected = lane_keeping_frames(fps);
        if end <= start || end - start != expected {
            return Err(Error::InvalidEvent(format!(
                "lane-keeping segment [{start}, {end}) spans {} frames; must be exactly {expected} (5 s at {fps} fps)",
                end.saturating_sub(start)
            )));
        }
        Ok(ManeuverEvent {
            kind: Maneuver::LaneKeeping,
            anchor: EventAnchor::Segment { start, end },
        })
    }

    pub fn kind(&self) -> Maneuver {
        self.kind
    }

    pub fn anchor(&self) -> EventAnchor {
        self.anchor
    }

    pub fn syncf_frame(&self) -> Option<usize> {
        match self.anchor {
            EventAnchor::SyncF(f) => Some(f),
            EventAnchor::Segment { .. } => None,
        }
    }

    pub fn segment(&self) -> Option<(usize, usize)> {
        match self.anchor {
            EventAnchor::Segment { start, end } => Some((start, end)),
            EventAnchor::SyncF(_) => None,
        }
    }

    /// True when a lane change can be swept over `[-sweep_seconds, +sweep_seconds]`
    /// with windows of `window_frames` inside a drive of `drive_len` frames.
    pub fn is_sweepable(&self, drive_len: usize, fps: u32, window_frames: usize, sweep_seconds: f64) -> bool {
        self.check_sweep_margin(drive_len, fps, window_frames, sweep_seconds).is_ok()
    }

    pub(crate) fn check_sweep_margin(
        &self,
        drive_len: usize,
        fps: u32,
        window_frames: usize,
        sweep_seconds: f64,
    ) -> std::result::Result<(), String> {
        let syncf = self
            .syncf_frame()
            .ok_or_else(|| "lane-keeping events have no SyncF".to_string())?;
        let sweep = seconds_to_frames(sweep_seconds, fps);
        let before = sweep + window_frames;
        if syncf < before {
            return Err(format!(
                "SyncF {syncf} has {syncf} frames before it, needs {before}"
            ));
        }
        if syncf + sweep > drive_len {
            return Err(format!(
                "SyncF {syncf} needs {sweep} frames after it but the drive ends at {drive_len}"
            ));
        }
        Ok(())
    }
}

impl fmt::Display for ManeuverEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.anchor {
            EventAnchor::SyncF(s) => write!(f, "{}@{}", self.kind.short_name(), s),
            EventAnchor::Segment { start, end } => {
                write!(f, "{}[{}..{})", self.kind.short_name(), start, end)
            }
        }
    }
}

pub fn lane_keeping_frames(fps: u32) -> usize {
    5 * fps as usize
}

/// Rounds a duration in seconds to whole frames.
pub fn seconds_to_frames(seconds: f64, fps: u32) -> usize {
    (seconds * fps as f64).round().max(0.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_kinds() {
        assert_eq!("LLC".parse::<Maneuver>().unwrap(), Maneuver::LeftLaneChange);
        assert_eq!("right_lane_change".parse::<Maneuver>().unwrap(), Maneuver::RightLaneChange);
        assert_eq!("LaneKeeping".parse::<Maneuver>().unwrap(), Maneuver::LaneKeeping);
        assert!("merge".parse::<Maneuver>().is_err());
    }

    #[test]
    fn lane_keeping_must_be_five_seconds() {
        assert!(ManeuverEvent::lane_keeping(0, 150, 30).is_ok());
        assert!(ManeuverEvent::lane_keeping(0, 149, 30).is_err());
        assert!(ManeuverEvent::lane_keeping(10, 10, 30).is_err());
    }

    #[test]
    fn sweep_margin_arithmetic() {
        let ev = ManeuverEvent::lane_change(Maneuver::LeftLaneChange, 9000).unwrap();
        assert!(ev.is_sweepable(9150, 30, 150, 5.0));
        assert!(!ev.is_sweepable(9149, 30, 150, 5.0));
        let early = ManeuverEvent::lane_change(Maneuver::LeftLaneChange, 300).unwrap();
        assert!(early.is_sweepable(450, 30, 150, 5.0));
        let too_early = ManeuverEvent::lane_change(Maneuver::LeftLaneChange, 299).unwrap();
        assert!(!too_early.is_sweepable(10_000, 30, 150, 5.0));
    }

    #[test]
    fn lane_keeping_cannot_be_a_lane_change() {
        assert!(ManeuverEvent::lane_change(Maneuver::LaneKeeping, 10).is_err());
    }
}
