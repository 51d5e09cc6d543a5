//! Training, sliding-window testing and leave-one-driver-out evaluation.
//!
//! Lane-change models train on the window that ends at SyncF; the
//! lane-keeping model trains on the window that ends at its segment end.
//! Testing sweeps a window over each lane change, one frame at a time, from
//! `-sweep_seconds` to `+sweep_seconds` relative to SyncF, where the offset is
//! the frame at which the window ends.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::behavior::{classify, fit_behavior_model, BehaviorModel};
use crate::config::FeatureConfig;
use crate::dataset::{Corpus, Drive, GazeSource};
use crate::error::{Error, Result};
use crate::event::{seconds_to_frames, EventAnchor, Maneuver, ManeuverEvent};
use crate::features::{assemble_features, GlanceFeatureVector};
use crate::scanpath::{Scanpath, ScanpathId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub features: FeatureConfig,
    /// Half-width of the test sweep around SyncF, in seconds.
    pub sweep_seconds: f64,
    pub lane_change_training: GazeSource,
    pub lane_keeping_training: GazeSource,
    pub testing: GazeSource,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            features: FeatureConfig::default(),
            sweep_seconds: 5.0,
            lane_change_training: GazeSource::Annotated,
            lane_keeping_training: GazeSource::Estimated,
            testing: GazeSource::Estimated,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        if !(self.sweep_seconds.is_finite() && self.sweep_seconds >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sweep_seconds must be nonnegative, got {}",
                self.sweep_seconds
            )));
        }
        Ok(())
    }

    pub fn training_source(&self, kind: Maneuver) -> GazeSource {
        if kind.is_lane_change() {
            self.lane_change_training
        } else {
            self.lane_keeping_training
        }
    }
}

/// Identifies one event of one drive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventRef {
    pub drive: ScanpathId,
    pub event_index: usize,
    pub kind: Maneuver,
}

impl fmt::Display for EventRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{} ({})", self.drive, self.event_index, self.kind.short_name())
    }
}

/// One test window of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub feature: GlanceFeatureVector,
    /// Frame offset of the window end relative to SyncF.
    pub offset_frames: i64,
    pub t_rel: f64,
    pub event: EventRef,
    pub truth: Maneuver,
}

/// Sweeps `config`-sized windows across a lane change. The sample at offset
/// `k` covers `[syncf + k - window, syncf + k)` for `k` in
/// `-sweep..=sweep` frames.
pub fn window_sweep(
    scanpath: &Scanpath,
    event: &ManeuverEvent,
    event_index: usize,
    config: &FeatureConfig,
    sweep_seconds: f64,
) -> Result<Vec<WindowSample>> {
    config.validate()?;
    let fps = scanpath.fps();
    let window = config.window_frames(fps);
    let event_ref = EventRef {
        drive: scanpath.id().clone(),
        event_index,
        kind: event.kind(),
    };
    event
        .check_sweep_margin(scanpath.len(), fps, window, sweep_seconds)
        .map_err(|reason| Error::InsufficientMargin {
            event: event_ref.to_string(),
            reason,
        })?;
    let syncf = event.syncf_frame().expect("margin check requires SyncF") as i64;
    let sweep = seconds_to_frames(sweep_seconds, fps) as i64;

    (-sweep..=sweep)
        .map(|k| {
            let end = (syncf + k) as usize;
            let w = scanpath.window(end - window..end)?;
            Ok(WindowSample {
                feature: assemble_features(&w, config)?,
                offset_frames: k,
                t_rel: k as f64 / fps as f64,
                event: event_ref.clone(),
                truth: event.kind(),
            })
        })
        .collect()
}

/// A descriptor extracted for training, tagged with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub feature: GlanceFeatureVector,
    pub label: Maneuver,
    pub provenance: EventRef,
    pub source: GazeSource,
}

/// The training window of an event: ending at SyncF for lane changes, at
/// the segment end for lane keeping.
pub fn training_window(event: &ManeuverEvent, window_frames: usize) -> Option<std::ops::Range<usize>> {
    let end = match event.anchor() {
        EventAnchor::SyncF(f) => f,
        EventAnchor::Segment { end, .. } => end,
    };
    (end >= window_frames).then(|| end - window_frames..end)
}

/// Training descriptors for every event in `drive`.
pub fn drive_training_samples(drive: &Drive, protocol: &ProtocolConfig) -> Result<Vec<TrainingSample>> {
    let window = protocol.features.window_frames(drive.fps());
    drive
        .events()
        .iter()
        .enumerate()
        .map(|(i, ev)| {
            let provenance = EventRef {
                drive: drive.id().clone(),
                event_index: i,
                kind: ev.kind(),
            };
            let range = training_window(ev, window).ok_or_else(|| Error::InsufficientMargin {
                event: provenance.to_string(),
                reason: format!("needs {window} frames before its training window end"),
            })?;
            let source = protocol.training_source(ev.kind());
            let sp = drive.scanpath(source)?;
            Ok(TrainingSample {
                feature: assemble_features(&sp.window(range)?, &protocol.features)?,
                label: ev.kind(),
                provenance,
                source,
            })
        })
        .collect()
}

/// Training descriptors from every drive whose driver passes `include`.
pub fn training_samples(
    corpus: &Corpus,
    protocol: &ProtocolConfig,
    include: impl Fn(&str) -> bool,
) -> Result<Vec<TrainingSample>> {
    let mut out = Vec::new();
    for drive in corpus.drives.iter().filter(|d| include(d.driver_id())) {
        out.extend(drive_training_samples(drive, protocol)?);
    }
    Ok(out)
}

/// Fits one model per class, in canonical class order. `scope` names the
/// training set in errors.
pub fn fit_models(samples: &[TrainingSample], ridge_epsilon: f64, scope: &str) -> Result<Vec<BehaviorModel>> {
    Maneuver::ALL
        .iter()
        .map(|&class| {
            let features: Vec<GlanceFeatureVector> = samples
                .iter()
                .filter(|s| s.label == class)
                .map(|s| s.feature.clone())
                .collect();
            if features.len() < 2 {
                return Err(Error::InsufficientTraining {
                    scope: scope.to_string(),
                    class,
                    count: features.len(),
                });
            }
            fit_behavior_model(&features, class, ridge_epsilon)
        })
        .collect()
}

/// A test window after classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedSample {
    pub event: EventRef,
    pub truth: Maneuver,
    pub offset_frames: i64,
    pub t_rel: f64,
    pub predicted: Maneuver,
    /// Fitness under each model, in model order.
    pub scores: Vec<(Maneuver, f64)>,
}

/// Classifies every window of a sweep.
pub fn classify_sweep(samples: &[WindowSample], models: &[BehaviorModel]) -> Result<Vec<ClassifiedSample>> {
    samples
        .iter()
        .map(|s| {
            let c = classify(&s.feature, models)?;
            Ok(ClassifiedSample {
                event: s.event.clone(),
                truth: s.truth,
                offset_frames: s.offset_frames,
                t_rel: s.t_rel,
                predicted: c.label,
                scores: c.scores,
            })
        })
        .collect()
}

/// Sweeps and classifies every sweepable lane change in `drive`.
/// Returns the classified windows and the lane changes skipped for lack of margin.
pub fn test_drive(
    drive: &Drive,
    models: &[BehaviorModel],
    protocol: &ProtocolConfig,
) -> Result<(Vec<ClassifiedSample>, Vec<EventRef>)> {
    let sp = drive.scanpath(protocol.testing)?;
    let window = protocol.features.window_frames(drive.fps());
    let mut classified = Vec::new();
    let mut skipped = Vec::new();
    for (i, ev) in drive.events().iter().enumerate() {
        if !ev.kind().is_lane_change() {
            continue;
        }
        if !ev.is_sweepable(sp.len(), sp.fps(), window, protocol.sweep_seconds) {
            skipped.push(EventRef {
                drive: drive.id().clone(),
                event_index: i,
                kind: ev.kind(),
            });
            continue;
        }
        let sweep = window_sweep(sp, ev, i, &protocol.features, protocol.sweep_seconds)?;
        classified.extend(classify_sweep(&sweep, models)?);
    }
    Ok((classified, skipped))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecallPoint {
    pub offset_frames: i64,
    pub t_rel: f64,
    pub recall: f64,
    pub true_positives: usize,
    pub positives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallCurve {
    pub positive: Maneuver,
    pub points: Vec<RecallPoint>,
    /// Time indices that had samples but no positives; they are not reported.
    pub omitted: usize,
}

impl RecallCurve {
    pub fn at_offset(&self, offset_frames: i64) -> Option<&RecallPoint> {
        self.points.iter().find(|p| p.offset_frames == offset_frames)
    }

    /// The point closest to `t_rel` seconds.
    pub fn at_time(&self, t_rel: f64) -> Option<&RecallPoint> {
        self.points
            .iter()
            .min_by(|a, b| (a.t_rel - t_rel).abs().total_cmp(&(b.t_rel - t_rel).abs()))
    }
}

/// Recall of `positive` per time index: windows of `positive` events that were
/// predicted `positive`, over all windows of `positive` events. Other classes
/// count as negatives and do not enter the ratio.
pub fn recall_curve(samples: &[ClassifiedSample], positive: Maneuver, fps: u32) -> RecallCurve {
    let mut tally: BTreeMap<i64, (usize, usize)> = BTreeMap::new();
    for s in samples {
        let entry = tally.entry(s.offset_frames).or_default();
        if s.truth == positive {
            entry.1 += 1;
            if s.predicted == positive {
                entry.0 += 1;
            }
        }
    }
    let mut omitted = 0;
    let points = tally
        .into_iter()
        .filter_map(|(k, (tp, p))| {
            if p == 0 {
                omitted += 1;
                return None;
            }
            Some(RecallPoint {
                offset_frames: k,
                t_rel: k as f64 / fps as f64,
                recall: tp as f64 / p as f64,
                true_positives: tp,
                positives: p,
            })
        })
        .collect();
    RecallCurve {
        positive,
        points,
        omitted,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub offset_frames: i64,
    pub t_rel: f64,
    pub mean: f64,
    /// Population standard deviation across events.
    pub std: f64,
    pub count: usize,
}

/// Fitness of one model over the sweeps of one event kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceTrace {
    pub event_kind: Maneuver,
    pub model: Maneuver,
    pub points: Vec<TracePoint>,
}

/// Mean and standard deviation of every model's fitness per time index,
/// grouped by the kind of event swept. Ordered by event kind, then model.
pub fn confidence_traces(samples: &[ClassifiedSample], fps: u32) -> Vec<ConfidenceTrace> {
    let mut groups: BTreeMap<(Maneuver, Maneuver), BTreeMap<i64, Vec<f64>>> = BTreeMap::new();
    for s in samples {
        for &(model, fitness) in &s.scores {
            groups
                .entry((s.truth, model))
                .or_default()
                .entry(s.offset_frames)
                .or_default()
                .push(fitness);
        }
    }
    groups
        .into_iter()
        .map(|((event_kind, model), by_t)| ConfidenceTrace {
            event_kind,
            model,
            points: by_t
                .into_iter()
                .map(|(k, values)| {
                    let n = values.len() as f64;
                    let mean = values.iter().sum::<f64>() / n;
                    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    TracePoint {
                        offset_frames: k,
                        t_rel: k as f64 / fps as f64,
                        mean,
                        std: var.sqrt(),
                        count: values.len(),
                    }
                })
                .collect(),
        })
        .collect()
}

/// Sweeps the given lane changes of one scanpath and returns fitness traces.
pub fn event_confidence_traces(
    scanpath: &Scanpath,
    events: &[ManeuverEvent],
    models: &[BehaviorModel],
    config: &FeatureConfig,
    sweep_seconds: f64,
) -> Result<Vec<ConfidenceTrace>> {
    let mut classified = Vec::new();
    for (i, ev) in events.iter().enumerate() {
        let sweep = window_sweep(scanpath, ev, i, config, sweep_seconds)?;
        classified.extend(classify_sweep(&sweep, models)?);
    }
    Ok(confidence_traces(&classified, scanpath.fps()))
}

/// One leave-one-driver-out fold.
#[derive(Debug, Clone)]
pub struct FoldResult {
    pub held_out: String,
    pub models: Vec<BehaviorModel>,
    /// Events whose descriptors trained this fold's models.
    pub training_provenance: Vec<EventRef>,
    pub samples: Vec<ClassifiedSample>,
    pub skipped: Vec<EventRef>,
    /// Per-fold recall, lane-change classes in canonical order.
    pub curves: Vec<RecallCurve>,
}

#[derive(Debug, Clone)]
pub struct CvReport {
    pub folds: Vec<FoldResult>,
    /// Recall pooled over folds (true positives and positives summed per time index).
    pub pooled: Vec<RecallCurve>,
    pub traces: Vec<ConfidenceTrace>,
}

impl CvReport {
    pub fn pooled_curve(&self, positive: Maneuver) -> Option<&RecallCurve> {
        self.pooled.iter().find(|c| c.positive == positive)
    }
}

fn corpus_fps(corpus: &Corpus) -> Result<u32> {
    let fps = corpus
        .drives
        .first()
        .map(Drive::fps)
        .ok_or_else(|| Error::Protocol("corpus has no drives".into()))?;
    if corpus.drives.iter().any(|d| d.fps() != fps) {
        return Err(Error::Protocol("all drives must share one frame rate".into()));
    }
    Ok(fps)
}

/// Trains on every driver except `held_out` and tests on `held_out`'s drives.
pub fn lodo_fold(corpus: &Corpus, protocol: &ProtocolConfig, held_out: &str) -> Result<FoldResult> {
    protocol.validate()?;
    let fps = corpus_fps(corpus)?;
    let train = training_samples(corpus, protocol, |d| d != held_out)?;
    let scope = format!("fold holding out driver `{held_out}`");
    let models = fit_models(&train, protocol.features.ridge_epsilon, &scope)?;

    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    for drive in corpus.drives.iter().filter(|d| d.driver_id() == held_out) {
        let (c, s) = test_drive(drive, &models, protocol)?;
        samples.extend(c);
        skipped.extend(s);
    }
    let curves = Maneuver::LANE_CHANGES
        .iter()
        .map(|&m| recall_curve(&samples, m, fps))
        .collect();
    Ok(FoldResult {
        held_out: held_out.to_string(),
        models,
        training_provenance: train.into_iter().map(|s| s.provenance).collect(),
        samples,
        skipped,
        curves,
    })
}

/// Combines folds into pooled recall curves and confidence traces.
pub fn aggregate_folds(folds: Vec<FoldResult>, fps: u32) -> CvReport {
    let all: Vec<ClassifiedSample> = folds.iter().flat_map(|f| f.samples.iter().cloned()).collect();
    let pooled = Maneuver::LANE_CHANGES
        .iter()
        .map(|&m| recall_curve(&all, m, fps))
        .collect();
    let traces = confidence_traces(&all, fps);
    CvReport { folds, pooled, traces }
}

/// Leave-one-driver-out cross-validation, one fold per driver in sorted order.
pub fn lodo_cv(corpus: &Corpus, protocol: &ProtocolConfig) -> Result<CvReport> {
    let drivers = corpus.drivers();
    if drivers.len() < 2 {
        return Err(Error::Protocol(format!(
            "leave-one-driver-out needs at least 2 drivers, corpus has {}",
            drivers.len()
        )));
    }
    let fps = corpus_fps(corpus)?;
    let folds = drivers
        .iter()
        .map(|d| lodo_fold(corpus, protocol, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate_folds(folds, fps))
}
