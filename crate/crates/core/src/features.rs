//! Spatio-temporal glance descriptors over a window of gaze-zone labels.
//!
//! * Gaze accumulation: fraction of the window's frames spent in each zone.
//! * Glance frequency: transitions into each zone per second. The noise-free
//!   form counts every label change; the robust form only confirms a
//!   transition into `g_i` when a strict majority of the `W` frames before
//!   frame `i` already agree with `g_i`.
//! * Glance duration: length in seconds of the longest confirmed glance to
//!   each zone.
//!
//! `Unknown` frames stay in the denominator `N` but never count toward a
//! zone's numerator. A confirmed transition into `Unknown` closes the glance
//! that was open, and the `Unknown` run itself is tracked separately.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::config::{FeatureConfig, FeatureMode};
use crate::error::{Error, Result};
use crate::scanpath::{ScanpathId, ScanpathWindow};
use crate::zone::{GazeZone, ZoneVector, ZONE_COUNT};

/// Inclusive `[start, end]` frame indices of one glance, relative to the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn frames(&self) -> usize {
        self.end - self.start + 1
    }
}

/// Output of the debounced glance tracker.
#[derive(Debug, Clone, PartialEq)]
pub struct GlanceSegments {
    /// Confirmed glances per canonical zone, ordered by start.
    pub segments: [Vec<Segment>; ZONE_COUNT],
    /// Confirmed runs of `Unknown`. They end glances but have no descriptor.
    pub unknown_segments: Vec<Segment>,
    /// Confirmed transitions into each zone; equals `segments[j].len()`.
    pub counts: [usize; ZONE_COUNT],
    pub window_frames: usize,
}

impl GlanceSegments {
    /// `C_G / T`, in glances per second.
    pub fn frequencies(&self, fps: u32) -> ZoneVector {
        let seconds = self.window_frames as f64 / fps as f64;
        let mut out = [0.0; ZONE_COUNT];
        for (f, &c) in out.iter_mut().zip(&self.counts) {
            *f = c as f64 / seconds;
        }
        out
    }

    /// Longest glance per zone in seconds, 0 for zones without glances.
    pub fn longest_durations(&self, fps: u32) -> ZoneVector {
        let mut out = [0.0; ZONE_COUNT];
        for (d, segs) in out.iter_mut().zip(&self.segments) {
            if let Some(longest) = segs.iter().map(Segment::frames).max() {
                *d = longest as f64 / fps as f64;
            }
        }
        out
    }
}

/// Per-zone fraction of frames: `(1/N) * sum_n 1(g_n == z_j)`.
pub fn gaze_accumulation(window: &[GazeZone]) -> Result<ZoneVector> {
    if window.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let mut counts = [0usize; ZONE_COUNT];
    for z in window {
        if let Some(j) = z.index() {
            counts[j] += 1;
        }
    }
    let n = window.len() as f64;
    Ok(counts.map(|c| c as f64 / n))
}

/// Transitions into each zone per second, trusting every label change.
/// The run the window opens with is not counted.
pub fn glance_frequency_noise_free(window: &[GazeZone], fps: u32) -> Result<ZoneVector> {
    if window.len() < 2 {
        return Err(Error::WindowTooShort {
            what: "glance frequency",
            len: window.len(),
            min: 2,
        });
    }
    let seconds = window.len() as f64 / fps as f64;
    let mut counts = [0usize; ZONE_COUNT];
    for pair in window.windows(2) {
        if pair[1] != pair[0] {
            if let Some(j) = pair[1].index() {
                counts[j] += 1;
            }
        }
    }
    Ok(counts.map(|c| c as f64 / seconds))
}

/// Debounced glance tracking.
///
/// The state starts at the first frame's label. For each frame `i` with at
/// least `w` frames before it, a label differing from the state is accepted
/// when more than `w / 2` of the preceding `w` frames carry the same label.
/// An accepted transition opens a glance at `i` and closes the previous one at
/// `i - 1`; the last open glance closes at the final frame. The opening run
/// is never recorded, so each zone has exactly one segment per confirmed
/// transition.
pub fn glance_segments_robust(window: &[GazeZone], w: usize) -> Result<GlanceSegments> {
    let n = window.len();
    if w < 1 || w >= n {
        return Err(Error::InvalidDebounce { w, len: n });
    }

    let mut segments: [Vec<Segment>; ZONE_COUNT] = Default::default();
    let mut unknown_segments = Vec::new();
    let mut counts = [0usize; ZONE_COUNT];

    let mut close = |zone: GazeZone, seg: Segment| match zone.index() {
        Some(j) => segments[j].push(seg),
        None => unknown_segments.push(seg),
    };

    let mut last = window[0];
    let mut open: Option<(GazeZone, usize)> = None;
    for i in w..n {
        let g = window[i];
        if g == last {
            continue;
        }
        let agreeing = window[i - w..i].iter().filter(|&&z| z == g).count();
        if 2 * agreeing > w {
            if let Some(j) = g.index() {
                counts[j] += 1;
            }
            if let Some((zone, start)) = open.take() {
                close(zone, Segment { start, end: i - 1 });
            }
            open = Some((g, i));
            last = g;
        }
    }
    if let Some((zone, start)) = open {
        close(zone, Segment { start, end: n - 1 });
    }

    Ok(GlanceSegments {
        segments,
        unknown_segments,
        counts,
        window_frames: n,
    })
}

/// Debounced glance frequency, `C_G / T`.
pub fn glance_frequency(window: &[GazeZone], w: usize, fps: u32) -> Result<ZoneVector> {
    Ok(glance_segments_robust(window, w)?.frequencies(fps))
}

/// Longest debounced glance per zone, in seconds.
pub fn glance_duration(window: &[GazeZone], w: usize, fps: u32) -> Result<ZoneVector> {
    Ok(glance_segments_robust(window, w)?.longest_durations(fps))
}

/// The descriptor `h` for one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlanceFeatureVector {
    pub values: Vec<f64>,
    pub config: FeatureConfig,
    /// `[start, end)` frames within the source scanpath.
    pub window: Range<usize>,
    pub source: ScanpathId,
}

impl GlanceFeatureVector {
    pub fn dimension(&self) -> usize {
        self.values.len()
    }
}

/// Computes the feature vector selected by `config.mode` over `window`, whose
/// length must be `round(window_seconds * fps)`.
pub fn assemble_features(window: &ScanpathWindow<'_>, config: &FeatureConfig) -> Result<GlanceFeatureVector> {
    config.validate()?;
    let expected = config.window_frames(window.fps);
    if window.len() != expected {
        return Err(Error::WindowLength {
            expected,
            actual: window.len(),
        });
    }
    let values = feature_values(window.zones, window.fps, config)?;
    Ok(GlanceFeatureVector {
        values,
        config: *config,
        window: window.range.clone(),
        source: window.source.clone(),
    })
}

fn feature_values(zones: &[GazeZone], fps: u32, config: &FeatureConfig) -> Result<Vec<f64>> {
    Ok(match config.mode {
        FeatureMode::Accumulation => gaze_accumulation(zones)?.to_vec(),
        FeatureMode::Duration => glance_duration(zones, config.debounce_w, fps)?.to_vec(),
        FeatureMode::DurationFrequency => {
            let segs = glance_segments_robust(zones, config.debounce_w)?;
            let mut v = segs.longest_durations(fps).to_vec();
            v.extend_from_slice(&segs.frequencies(fps));
            v
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scanpath::Scanpath;
    use GazeZone::*;

    fn runs(parts: &[(GazeZone, usize)]) -> Vec<GazeZone> {
        parts
            .iter()
            .flat_map(|&(z, k)| std::iter::repeat_n(z, k))
            .collect()
    }

    fn idx(z: GazeZone) -> usize {
        z.index().unwrap()
    }

    #[test]
    fn accumulation_single_zone() {
        let ga = gaze_accumulation(&vec![Front; 150]).unwrap();
        assert_eq!(ga[0], 1.0);
        assert!(ga[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn accumulation_two_zones() {
        let ga = gaze_accumulation(&runs(&[(Rearview, 30), (Front, 120)])).unwrap();
        assert_eq!(ga[idx(Rearview)], 0.2);
        assert_eq!(ga[idx(Front)], 0.8);
    }

    #[test]
    fn accumulation_unknown_stays_in_denominator() {
        let ga = gaze_accumulation(&runs(&[(Front, 3), (Unknown, 1)])).unwrap();
        assert_eq!(ga[0], 0.75);
        assert_eq!(ga.iter().sum::<f64>(), 0.75);
        assert!(matches!(gaze_accumulation(&[]), Err(Error::EmptyWindow)));
    }

    #[test]
    fn noise_free_frequency() {
        // 6 frames at 30 fps, T = 0.2 s.
        let f = glance_frequency_noise_free(&[Front, Front, Right, Right, Front, Front], 30).unwrap();
        assert!((f[idx(Right)] - 5.0).abs() < 1e-12);
        assert!((f[idx(Front)] - 5.0).abs() < 1e-12);
        assert_eq!(f.iter().filter(|&&v| v != 0.0).count(), 2);

        let zero = glance_frequency_noise_free(&vec![Front; 30], 30).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        assert!(glance_frequency_noise_free(&[Front], 30).is_err());
    }

    #[test]
    fn robust_segments_on_clean_runs() {
        let g = runs(&[(Front, 20), (Right, 20), (Front, 20)]);
        let s = glance_segments_robust(&g, 6).unwrap();
        assert_eq!(s.counts[idx(Right)], 1);
        assert_eq!(s.counts[idx(Front)], 1);
        // Right starts at frame 20; four of the six frames before frame 24 are Right.
        assert_eq!(s.segments[idx(Right)], vec![Segment { start: 24, end: 43 }]);
        assert_eq!(s.segments[idx(Front)], vec![Segment { start: 44, end: 59 }]);
    }

    #[test]
    fn single_frame_blip_is_ignored() {
        let g = runs(&[(Front, 50), (Right, 1), (Front, 49)]);
        let s = glance_segments_robust(&g, 6).unwrap();
        assert_eq!(s.counts, [0; ZONE_COUNT]);
        assert!(s.segments.iter().all(Vec::is_empty));
    }

    #[test]
    fn constant_window_has_no_glances() {
        for w in 1..10 {
            let s = glance_segments_robust(&vec![Speedometer; 40], w).unwrap();
            assert_eq!(s.counts, [0; ZONE_COUNT]);
            assert!(s.unknown_segments.is_empty());
        }
    }

    #[test]
    fn even_split_does_not_confirm() {
        // W = 4: only two of the four preceding frames are Left when Left reappears.
        let g = [Front, Front, Front, Left, Left, Front, Left, Front, Front];
        let s = glance_segments_robust(&g, 4).unwrap();
        assert_eq!(s.counts[idx(Left)], 0);
    }

    #[test]
    fn debounce_bounds() {
        let g = vec![Front; 10];
        assert!(glance_segments_robust(&g, 0).is_err());
        assert!(glance_segments_robust(&g, 10).is_err());
        assert!(glance_segments_robust(&g, 9).is_ok());
    }

    #[test]
    fn unknown_ends_a_glance_without_a_descriptor() {
        let g = runs(&[(Front, 10), (Left, 10), (Unknown, 10), (Front, 10)]);
        let s = glance_segments_robust(&g, 4).unwrap();
        assert_eq!(s.segments[idx(Left)], vec![Segment { start: 13, end: 22 }]);
        assert_eq!(s.unknown_segments, vec![Segment { start: 23, end: 32 }]);
        assert_eq!(s.segments[idx(Front)], vec![Segment { start: 33, end: 39 }]);
        assert_eq!(s.counts.iter().sum::<usize>(), 2);
    }

    #[test]
    fn frequency_is_count_over_window_seconds() {
        let g = runs(&[(Front, 20), (Right, 20), (Front, 20)]);
        let f = glance_frequency(&g, 6, 30).unwrap();
        assert_eq!(f[idx(Right)], 0.5);
        assert_eq!(f[idx(Front)], 0.5);
        assert!(glance_frequency(&vec![Front; 60], 6, 30).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn duration_examples() {
        // Right is confirmed 4 frames late and Front returns 4 frames late,
        // so the tracked Right glance keeps its 60-frame length.
        let g = runs(&[(Front, 30), (Right, 60), (Front, 60)]);
        let d = glance_duration(&g, 6, 30).unwrap();
        assert_eq!(d[idx(Right)], 2.0);
        assert_eq!(d[idx(Front)], 56.0 / 30.0);
        assert_eq!(d[idx(Left)], 0.0);

        let g = runs(&[(Front, 20), (Right, 30), (Front, 20), (Right, 90), (Front, 20)]);
        let d = glance_duration(&g, 6, 30).unwrap();
        assert_eq!(d[idx(Right)], 3.0);
    }

    #[test]
    fn assemble_modes() {
        let sp = Scanpath::new(ScanpathId::new("d", "r"), 30, vec![Front; 150]).unwrap();
        let w = sp.as_window();
        let ga = assemble_features(&w, &FeatureConfig::with_mode(FeatureMode::Accumulation)).unwrap();
        assert_eq!(ga.values, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);

        let zones = runs(&[(Front, 40), (Left, 50), (Rearview, 30), (Front, 30)]);
        let sp = Scanpath::new(ScanpathId::new("d", "r"), 30, zones.clone()).unwrap();
        let cfg = FeatureConfig::with_mode(FeatureMode::DurationFrequency);
        let h = assemble_features(&sp.as_window(), &cfg).unwrap();
        assert_eq!(h.dimension(), 18);
        assert_eq!(&h.values[..9], &glance_duration(&zones, 6, 30).unwrap());
        assert_eq!(&h.values[9..], &glance_frequency(&zones, 6, 30).unwrap());
    }

    #[test]
    fn assemble_checks_window_length() {
        let sp = Scanpath::new(ScanpathId::new("d", "r"), 30, vec![Front; 149]).unwrap();
        let err = assemble_features(&sp.as_window(), &FeatureConfig::default()).unwrap_err();
        assert!(matches!(err, Error::WindowLength { expected: 150, actual: 149 }));
    }
}
