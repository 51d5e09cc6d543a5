//! File formats.
//!
//! Scanpaths, events, models, manifests and generator configs are JSON
//! documents carrying a `format` tag and a `version`; loaders reject any other
//! tag or version. Floats are written in shortest round-trip form, so every
//! load reproduces the saved value bit for bit. Metric outputs are CSV with
//! a header row and a fixed column order. Every writer goes through a
//! temporary file in the destination directory and renames it into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::behavior::BehaviorModel;
use crate::config::FeatureConfig;
use crate::dataset::{Corpus, Drive};
use crate::error::{Error, Result};
use crate::eval::{ClassifiedSample, ConfidenceTrace, ConfusionMatrix, MetricDistributions, RecallCurve, TrainingSample};
use crate::event::{EventAnchor, Maneuver, ManeuverEvent};
use crate::scanpath::{Scanpath, ScanpathId};
use crate::synth::{NoiseChannel, SynthConfig};
use crate::zone::{canonical_zone_order, GazeZone};

pub const FORMAT_VERSION: u32 = 1;

pub const SCANPATH_FORMAT: &str = "gaze-dynamics/scanpath";
pub const EVENTS_FORMAT: &str = "gaze-dynamics/events";
pub const MODEL_FORMAT: &str = "gaze-dynamics/model";
pub const MANIFEST_FORMAT: &str = "gaze-dynamics/manifest";
pub const SYNTH_CONFIG_FORMAT: &str = "gaze-dynamics/synth-config";
pub const CHANNEL_FORMAT: &str = "gaze-dynamics/noise-channel";

/// Writes `bytes` to `path` through a temporary sibling file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

fn read_json<T: DeserializeOwned>(path: &Path, format: &str) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header: Header = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    if header.format != format {
        return Err(Error::format(
            path,
            format!("expected format `{format}`, found `{}`", header.format),
        ));
    }
    if header.version != FORMAT_VERSION {
        return Err(Error::format(
            path,
            format!("unsupported {format} version {} (supported: {FORMAT_VERSION})", header.version),
        ));
    }
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanpathFile {
    format: String,
    version: u32,
    driver_id: String,
    drive_id: String,
    fps: u32,
    zones: Vec<GazeZone>,
}

pub fn save_scanpath(scanpath: &Scanpath, path: &Path) -> Result<()> {
    write_json(
        &ScanpathFile {
            format: SCANPATH_FORMAT.into(),
            version: FORMAT_VERSION,
            driver_id: scanpath.id().driver_id.clone(),
            drive_id: scanpath.id().drive_id.clone(),
            fps: scanpath.fps(),
            zones: scanpath.zones().to_vec(),
        },
        path,
    )
}

pub fn load_scanpath(path: &Path) -> Result<Scanpath> {
    let f: ScanpathFile = read_json(path, SCANPATH_FORMAT)?;
    if f.fps == 0 {
        return Err(Error::format(path, "field `fps` must be positive"));
    }
    Scanpath::new(ScanpathId::new(f.driver_id, f.drive_id), f.fps, f.zones)
        .map_err(|e| Error::format(path, e.to_string()))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventRecord {
    kind: Maneuver,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    syncf_frame: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    segment: Option<[usize; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventsFile {
    format: String,
    version: u32,
    fps: u32,
    events: Vec<EventRecord>,
}

pub fn save_events(events: &[ManeuverEvent], fps: u32, path: &Path) -> Result<()> {
    let events = events
        .iter()
        .map(|e| match e.anchor() {
            EventAnchor::SyncF(f) => EventRecord {
                kind: e.kind(),
                syncf_frame: Some(f),
                segment: None,
            },
            EventAnchor::Segment { start, end } => EventRecord {
                kind: e.kind(),
                syncf_frame: None,
                segment: Some([start, end]),
            },
        })
        .collect();
    write_json(
        &EventsFile {
            format: EVENTS_FORMAT.into(),
            version: FORMAT_VERSION,
            fps,
            events,
        },
        path,
    )
}

/// Loads events and the frame rate they were marked at. Sweep margins are
/// not checked here.
pub fn load_events(path: &Path) -> Result<(Vec<ManeuverEvent>, u32)> {
    let f: EventsFile = read_json(path, EVENTS_FORMAT)?;
    if f.fps == 0 {
        return Err(Error::format(path, "field `fps` must be positive"));
    }
    let events = f
        .events
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let ctx = |e: Error| Error::format(path, format!("events[{i}]: {e}"));
            match (r.kind, r.syncf_frame, r.segment) {
                (Maneuver::LaneKeeping, None, Some([s, e])) => ManeuverEvent::lane_keeping(s, e, f.fps).map_err(ctx),
                (Maneuver::LaneKeeping, _, _) => Err(ctx(Error::InvalidEvent(
                    "lane-keeping events need `segment` and no `syncf_frame`".into(),
                ))),
                (kind, Some(syncf), None) => ManeuverEvent::lane_change(kind, syncf).map_err(ctx),
                (kind, _, _) => Err(ctx(Error::InvalidEvent(format!(
                    "{kind} events need `syncf_frame` and no `segment`"
                )))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((events, f.fps))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRecord {
    label: Maneuver,
    ridge_epsilon: f64,
    mean: Vec<f64>,
    /// Row-major.
    covariance: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    fps: u32,
    feature_config: FeatureConfig,
    zone_order: Vec<GazeZone>,
    models: Vec<ModelRecord>,
}

/// Models fitted under one feature configuration and frame rate.
#[derive(Debug, Clone)]
pub struct ModelSet {
    pub fps: u32,
    pub config: FeatureConfig,
    pub models: Vec<BehaviorModel>,
}

impl ModelSet {
    /// Rejects feature configurations the models were not fitted under.
    pub fn check_features(&self, config: &FeatureConfig, fps: u32) -> Result<()> {
        config.check_compatible(&self.config)?;
        if fps != self.fps {
            return Err(Error::ConfigMismatch(format!("models fitted at {} fps, data at {fps} fps", self.fps)));
        }
        Ok(())
    }
}

pub fn save_model(set: &ModelSet, path: &Path) -> Result<()> {
    let models = set
        .models
        .iter()
        .map(|m| {
            if m.config().mode != set.config.mode {
                return Err(Error::MixedConfigs);
            }
            let d = m.dimension();
            let cov = m.covariance();
            Ok(ModelRecord {
                label: m.label(),
                ridge_epsilon: m.ridge_epsilon(),
                mean: m.mean().iter().copied().collect(),
                covariance: (0..d).flat_map(|i| (0..d).map(move |j| cov[(i, j)])).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_json(
        &ModelFile {
            format: MODEL_FORMAT.into(),
            version: FORMAT_VERSION,
            fps: set.fps,
            feature_config: set.config,
            zone_order: canonical_zone_order().to_vec(),
            models,
        },
        path,
    )
}

pub fn load_model(path: &Path) -> Result<ModelSet> {
    let f: ModelFile = read_json(path, MODEL_FORMAT)?;
    if f.zone_order != canonical_zone_order() {
        return Err(Error::format(path, "zone order differs from the canonical order"));
    }
    f.feature_config
        .validate()
        .map_err(|e| Error::format(path, e.to_string()))?;
    let d = f.feature_config.dimension();
    let models = f
        .models
        .into_iter()
        .map(|r| {
            if r.mean.len() != d || r.covariance.len() != d * d {
                return Err(Error::format(
                    path,
                    format!(
                        "{} model has {} mean and {} covariance entries; {} mode needs {d} and {}",
                        r.label,
                        r.mean.len(),
                        r.covariance.len(),
                        f.feature_config.mode,
                        d * d
                    ),
                ));
            }
            BehaviorModel::from_parts(
                r.label,
                DVector::from_vec(r.mean),
                DMatrix::from_row_slice(d, d, &r.covariance),
                r.ridge_epsilon,
                f.feature_config,
            )
            .map_err(|e| Error::format(path, e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelSet {
        fps: f.fps,
        config: f.feature_config,
        models,
    })
}

/// Loads a model file and checks it against the features it will score.
pub fn load_model_for(path: &Path, config: &FeatureConfig, fps: u32) -> Result<ModelSet> {
    let set = load_model(path)?;
    set.check_features(config, fps)
        .map_err(|e| Error::format(path, e.to_string()))?;
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub driver_id: String,
    pub drive_id: String,
    /// Estimated gaze stream, relative to the manifest.
    pub scanpath: PathBuf,
    pub events: PathBuf,
    /// Annotated gaze stream, when available.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    pub format: String,
    pub version: u32,
    pub drives: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn new(drives: Vec<ManifestEntry>) -> Self {
        CorpusManifest {
            format: MANIFEST_FORMAT.into(),
            version: FORMAT_VERSION,
            drives,
        }
    }
}

pub fn save_manifest(manifest: &CorpusManifest, path: &Path) -> Result<()> {
    write_json(manifest, path)
}

pub fn load_manifest(path: &Path) -> Result<CorpusManifest> {
    let m: CorpusManifest = read_json(path, MANIFEST_FORMAT)?;
    let mut seen = std::collections::BTreeSet::new();
    for e in &m.drives {
        if !seen.insert((e.driver_id.clone(), e.drive_id.clone())) {
            return Err(Error::format(
                path,
                format!("drive {}/{} is listed twice", e.driver_id, e.drive_id),
            ));
        }
    }
    Ok(m)
}

/// Loads every drive a manifest lists. Relative paths resolve against the
/// manifest's directory.
pub fn load_corpus(manifest_path: &Path) -> Result<Corpus> {
    let manifest = load_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new(""));
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    let mut drives = Vec::with_capacity(manifest.drives.len());
    for entry in &manifest.drives {
        let expected = ScanpathId::new(&entry.driver_id, &entry.drive_id);
        let check_id = |sp: Scanpath, p: &Path| {
            if sp.id() != &expected {
                Err(Error::format(
                    p,
                    format!("scanpath is {} but the manifest lists {expected}", sp.id()),
                ))
            } else {
                Ok(sp)
            }
        };
        let sp_path = resolve(&entry.scanpath);
        let estimated = check_id(load_scanpath(&sp_path)?, &sp_path)?;
        let annotated = match &entry.ground_truth {
            Some(p) => {
                let p = resolve(p);
                Some(check_id(load_scanpath(&p)?, &p)?)
            }
            None => None,
        };
        let ev_path = resolve(&entry.events);
        let (events, fps) = load_events(&ev_path)?;
        if fps != estimated.fps() {
            return Err(Error::format(
                &ev_path,
                format!("events marked at {fps} fps but the scanpath runs at {} fps", estimated.fps()),
            ));
        }
        drives.push(Drive::new(estimated, annotated, events).map_err(|e| Error::format(&ev_path, e.to_string()))?);
    }
    Corpus::new(drives)
}

/// Writes a corpus as one directory per driver plus `manifest.json`.
/// Returns the manifest path.
pub fn save_corpus(corpus: &Corpus, dir: &Path) -> Result<PathBuf> {
    let mut entries = Vec::with_capacity(corpus.drives.len());
    for d in &corpus.drives {
        let sub = PathBuf::from(sanitize(&d.id().driver_id));
        let stem = sanitize(&d.id().drive_id);
        let scanpath = sub.join(format!("{stem}.estimated.json"));
        let events = sub.join(format!("{stem}.events.json"));
        save_scanpath(d.estimated(), &dir.join(&scanpath))?;
        save_events(d.events(), d.fps(), &dir.join(&events))?;
        let ground_truth = match d.annotated() {
            Some(truth) => {
                let p = sub.join(format!("{stem}.annotated.json"));
                save_scanpath(truth, &dir.join(&p))?;
                Some(p)
            }
            None => None,
        };
        entries.push(ManifestEntry {
            driver_id: d.id().driver_id.clone(),
            drive_id: d.id().drive_id.clone(),
            scanpath,
            events,
            ground_truth,
        });
    }
    let path = dir.join("manifest.json");
    save_manifest(&CorpusManifest::new(entries), &path)?;
    Ok(path)
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct Versioned<T> {
    format: String,
    version: u32,
    #[serde(flatten)]
    body: T,
}

pub fn save_synth_config(config: &SynthConfig, path: &Path) -> Result<()> {
    write_json(
        &Versioned {
            format: SYNTH_CONFIG_FORMAT.into(),
            version: FORMAT_VERSION,
            body: config,
        },
        path,
    )
}

pub fn load_synth_config(path: &Path) -> Result<SynthConfig> {
    let v: Versioned<SynthConfig> = read_json(path, SYNTH_CONFIG_FORMAT)?;
    v.body.validate().map_err(|e| Error::format(path, e.to_string()))?;
    Ok(v.body)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelFile {
    format: String,
    version: u32,
    /// Row and column order of `confusion`.
    labels: Vec<GazeZone>,
    confusion: Vec<Vec<f64>>,
    burst_rho: f64,
}

pub fn save_channel(channel: &NoiseChannel, path: &Path) -> Result<()> {
    write_json(
        &ChannelFile {
            format: CHANNEL_FORMAT.into(),
            version: FORMAT_VERSION,
            labels: GazeZone::ALL_LABELS.to_vec(),
            confusion: channel.confusion.clone(),
            burst_rho: channel.burst_rho,
        },
        path,
    )
}

pub fn load_channel(path: &Path) -> Result<NoiseChannel> {
    let f: ChannelFile = read_json(path, CHANNEL_FORMAT)?;
    if f.labels != GazeZone::ALL_LABELS {
        return Err(Error::format(
            path,
            "labels must list the canonical zones followed by Unknown",
        ));
    }
    NoiseChannel::new(f.confusion, f.burst_rho).map_err(|e| Error::format(path, e.to_string()))
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Protocol(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner()
        .map_err(|e| Error::Protocol(format!("csv encoding failed: {e}")))
}

/// Shortest round-trip form; exponent notation for very small or large values.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn t_rel(offset_frames: i64, fps: u32) -> String {
    format!("{:.6}", offset_frames as f64 / fps as f64)
}

/// `frame_offset,t_rel,recall,true_positives,positives`, ordered by time.
pub fn write_recall_csv(curve: &RecallCurve, fps: u32, path: &Path) -> Result<()> {
    let rows = curve.points.iter().map(|p| {
        vec![
            p.offset_frames.to_string(),
            t_rel(p.offset_frames, fps),
            num(p.recall),
            p.true_positives.to_string(),
            p.positives.to_string(),
        ]
    });
    write_atomic(
        path,
        &csv_bytes(&["frame_offset", "t_rel", "recall", "true_positives", "positives"], rows)?,
    )
}

/// `event_kind,model,frame_offset,t_rel,mean,std,count`, ordered by event
/// kind, model, time.
pub fn write_traces_csv(traces: &[ConfidenceTrace], fps: u32, path: &Path) -> Result<()> {
    let rows = traces.iter().flat_map(|t| {
        t.points.iter().map(move |p| {
            vec![
                t.event_kind.short_name().to_string(),
                t.model.short_name().to_string(),
                p.offset_frames.to_string(),
                t_rel(p.offset_frames, fps),
                num(p.mean),
                num(p.std),
                p.count.to_string(),
            ]
        })
    });
    write_atomic(
        path,
        &csv_bytes(&["event_kind", "model", "frame_offset", "t_rel", "mean", "std", "count"], rows)?,
    )
}

/// `metric,zone,value`: all ratio values zone by zone, then all absolute errors.
pub fn write_distributions_csv(dist: &MetricDistributions, path: &Path) -> Result<()> {
    let mut rows = Vec::new();
    for (metric, lists) in [("ratio", &dist.ratio), ("abs_error", &dist.abs_error)] {
        for (zone, values) in canonical_zone_order().iter().zip(lists.iter()) {
            for v in values {
                rows.push(vec![metric.to_string(), zone.name().to_string(), num(*v)]);
            }
        }
    }
    write_atomic(path, &csv_bytes(&["metric", "zone", "value"], rows)?)
}

/// `true_zone,predicted_zone,count,rate`, one row per cell plus an
/// `Unknown` column per true zone.
pub fn write_confusion_csv(cm: &ConfusionMatrix, path: &Path) -> Result<()> {
    let rates = cm.rates();
    let mut rows = Vec::new();
    for (i, truth) in canonical_zone_order().iter().enumerate().take(cm.classes()) {
        let total = cm.row_total(i);
        for (j, pred) in canonical_zone_order().iter().enumerate().take(cm.classes()) {
            rows.push(vec![
                truth.name().into(),
                pred.name().into(),
                cm.counts[i][j].to_string(),
                num(rates[i][j]),
            ]);
        }
        let u = cm.unassigned[i];
        let rate = if total == 0 { 0.0 } else { u as f64 / total as f64 };
        rows.push(vec![truth.name().into(), "Unknown".into(), u.to_string(), num(rate)]);
    }
    write_atomic(path, &csv_bytes(&["true_zone", "predicted_zone", "count", "rate"], rows)?)
}

/// One row per classified window with every model's fitness.
pub fn write_predictions_csv(samples: &[ClassifiedSample], fps: u32, path: &Path) -> Result<()> {
    let mut header = vec![
        "driver_id",
        "drive_id",
        "event_index",
        "true_label",
        "frame_offset",
        "t_rel",
        "predicted_label",
    ];
    let fitness_cols: Vec<String> = Maneuver::ALL
        .iter()
        .map(|m| format!("fitness_{}", m.short_name()))
        .collect();
    header.extend(fitness_cols.iter().map(String::as_str));
    let rows = samples.iter().map(|s| {
        let mut row = vec![
            s.event.drive.driver_id.clone(),
            s.event.drive.drive_id.clone(),
            s.event.event_index.to_string(),
            s.truth.short_name().to_string(),
            s.offset_frames.to_string(),
            t_rel(s.offset_frames, fps),
            s.predicted.short_name().to_string(),
        ];
        for m in Maneuver::ALL {
            row.push(
                s.scores
                    .iter()
                    .find(|(l, _)| *l == m)
                    .map(|(_, f)| num(*f))
                    .unwrap_or_default(),
            );
        }
        row
    });
    write_atomic(path, &csv_bytes(&header, rows)?)
}

/// Training descriptors: provenance, label, source, then `f0..f{d-1}`.
pub fn write_features_csv(samples: &[TrainingSample], path: &Path) -> Result<()> {
    let d = samples.first().map_or(0, |s| s.feature.dimension());
    let feature_cols: Vec<String> = (0..d).map(|i| format!("f{i}")).collect();
    let mut header = vec!["driver_id", "drive_id", "event_index", "label", "source", "window_start", "window_end"];
    header.extend(feature_cols.iter().map(String::as_str));
    let rows = samples.iter().map(|s| {
        let mut row = vec![
            s.provenance.drive.driver_id.clone(),
            s.provenance.drive.drive_id.clone(),
            s.provenance.event_index.to_string(),
            s.label.short_name().to_string(),
            s.source.to_string(),
            s.feature.window.start.to_string(),
            s.feature.window.end.to_string(),
        ];
        row.extend(s.feature.values.iter().copied().map(num));
        row
    });
    write_atomic(path, &csv_bytes(&header, rows)?)
}
