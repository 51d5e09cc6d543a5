use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gaze_dynamics::eval::{
    aggregate_folds, confidence_traces, fit_models, lodo_fold, metric_distributions, recall_curve, test_drive,
    training_samples, weighted_accuracy, ClassifiedSample, ConfusionMatrix, CvReport, ProtocolConfig, RecallCurve,
};
use gaze_dynamics::io::{
    load_channel, load_corpus, load_model_for, load_synth_config, save_corpus, save_model, save_synth_config,
    write_atomic, write_confusion_csv, write_distributions_csv, write_features_csv, write_predictions_csv,
    write_recall_csv, write_traces_csv, ModelSet,
};
use gaze_dynamics::synth::{generate_corpus, reference_driver_counts, NoiseChannel, SynthConfig};
use gaze_dynamics::{BehaviorModel, Corpus, GazeSource, GazeZone, Maneuver};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::args::{CvArgs, EvalArgs, ExtractArgs, FitArgs, PredictArgs, ProtocolArgs, SynthArgs};

/// The fully resolved configuration of one run: logged up front and written
/// next to the outputs as `run_config.json`.
#[derive(Debug, Serialize)]
struct RunConfig {
    subcommand: &'static str,
    threads: usize,
    #[serde(flatten)]
    settings: serde_json::Value,
}

impl RunConfig {
    fn new(subcommand: &'static str, settings: serde_json::Value) -> Self {
        let run = RunConfig {
            subcommand,
            threads: rayon::current_num_threads(),
            settings,
        };
        info!("resolved configuration: {}", run.to_json());
        run
    }

    fn to_json(&self) -> String {
        serde_json::to_string(self).expect("run config serializes")
    }

    fn write(&self, out: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(&out.join("run_config.json"), text.as_bytes())?;
        Ok(())
    }
}

fn validated(args: &ProtocolArgs) -> Result<ProtocolConfig> {
    let protocol = args.protocol();
    protocol.validate().context("invalid feature or protocol settings")?;
    Ok(protocol)
}

fn load(manifest: &Path) -> Result<(Corpus, u32)> {
    let corpus = load_corpus(manifest)?;
    let Some(first) = corpus.drives.first() else {
        bail!("{}: manifest lists no drives", manifest.display());
    };
    let fps = first.fps();
    if corpus.drives.iter().any(|d| d.fps() != fps) {
        bail!("{}: drives run at different frame rates", manifest.display());
    }
    info!(
        "loaded {} drives from {} drivers at {fps} fps",
        corpus.drives.len(),
        corpus.drivers().len()
    );
    Ok((corpus, fps))
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => load_synth_config(path)?,
        None => SynthConfig::default(),
    };
    if let Some(n) = args.drivers {
        let table = match std::mem::take(&mut config.drivers) {
            t if t.is_empty() => reference_driver_counts(),
            t => t,
        };
        config.drivers = table.iter().cycle().take(n).copied().collect();
    }
    if let Some(fps) = args.fps {
        config.fps = fps;
    }
    match args.noise.as_deref() {
        None => {}
        Some("default") => config.channel = NoiseChannel::default_channel(),
        Some("identity") => config.channel = NoiseChannel::identity(),
        Some(path) => config.channel = load_channel(Path::new(path))?,
    }
    config.validate()?;

    let run = RunConfig::new(
        "synth",
        json!({ "seed": args.seed, "out": args.out, "synth": &config }),
    );
    let corpus = generate_corpus(&config, args.seed)?;
    let manifest = save_corpus(&corpus, &args.out)?;
    save_synth_config(&config, &args.out.join("synth_config.json"))?;
    run.write(&args.out)?;

    let mut totals = [0usize; 3];
    for d in &corpus.drives {
        for ev in d.events() {
            totals[ev.kind().index()] += 1;
        }
    }
    println!(
        "wrote {} drivers ({} LLC, {} RLC, {} LK events) to {}",
        corpus.drivers().len(),
        totals[0],
        totals[1],
        totals[2],
        manifest.display()
    );
    Ok(())
}

pub fn extract(args: &ExtractArgs) -> Result<()> {
    let protocol = validated(&args.protocol)?;
    let run = RunConfig::new(
        "extract",
        json!({ "manifest": args.manifest, "out": args.out, "protocol": protocol }),
    );
    let (corpus, _) = load(&args.manifest)?;
    let samples = training_samples(&corpus, &protocol, |_| true)?;
    write_features_csv(&samples, &args.out.join("features.csv"))?;
    run.write(&args.out)?;
    println!("wrote {} descriptors to {}", samples.len(), args.out.join("features.csv").display());
    Ok(())
}

pub fn fit(args: &FitArgs) -> Result<()> {
    let protocol = validated(&args.protocol)?;
    let run = RunConfig::new(
        "fit",
        json!({ "manifest": args.manifest, "out": args.out, "protocol": protocol }),
    );
    let (corpus, fps) = load(&args.manifest)?;
    let samples = training_samples(&corpus, &protocol, |_| true)?;
    let scope = format!("corpus {}", args.manifest.display());
    let models = fit_models(&samples, protocol.features.ridge_epsilon, &scope)?;
    for m in &models {
        let n = samples.iter().filter(|s| s.label == m.label()).count();
        info!("{}: {n} training windows, dimension {}", m.label(), m.dimension());
    }
    let path = args.out.join("models.json");
    save_model(
        &ModelSet {
            fps,
            config: protocol.features,
            models,
        },
        &path,
    )?;
    run.write(&args.out)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Sweeps every drive's lane changes with fixed models.
fn classify_corpus(
    corpus: &Corpus,
    models: &[BehaviorModel],
    protocol: &ProtocolConfig,
) -> Result<Vec<ClassifiedSample>> {
    let per_drive: Vec<_> = corpus
        .drives
        .par_iter()
        .map(|d| test_drive(d, models, protocol))
        .collect::<gaze_dynamics::Result<_>>()?;
    let mut samples = Vec::new();
    for (classified, skipped) in per_drive {
        for s in skipped {
            warn!("skipping {s}: not enough frames around SyncF for the sweep");
        }
        samples.extend(classified);
    }
    Ok(samples)
}

fn load_models(path: &Path, protocol: &ProtocolConfig, fps: u32) -> Result<Vec<BehaviorModel>> {
    let set = load_model_for(path, &protocol.features, fps)?;
    Ok(set.models)
}

pub fn predict(args: &PredictArgs) -> Result<()> {
    let protocol = validated(&args.protocol)?;
    let run = RunConfig::new(
        "predict",
        json!({ "manifest": args.manifest, "model": args.model, "out": args.out, "protocol": protocol }),
    );
    let (corpus, fps) = load(&args.manifest)?;
    let models = load_models(&args.model, &protocol, fps)?;
    let samples = classify_corpus(&corpus, &models, &protocol)?;
    let path = args.out.join("predictions.csv");
    write_predictions_csv(&samples, fps, &path)?;
    run.write(&args.out)?;
    println!("wrote {} classified windows to {}", samples.len(), path.display());
    Ok(())
}

/// Runs every fold, in parallel, and pools them in driver order.
fn cross_validate(corpus: &Corpus, protocol: &ProtocolConfig, fps: u32) -> Result<CvReport> {
    let drivers = corpus.drivers();
    if drivers.len() < 2 {
        bail!(
            "leave-one-driver-out needs at least 2 drivers, corpus has {}",
            drivers.len()
        );
    }
    let folds = drivers
        .par_iter()
        .map(|d| lodo_fold(corpus, protocol, d))
        .collect::<gaze_dynamics::Result<Vec<_>>>()?;
    for fold in &folds {
        for s in &fold.skipped {
            warn!("skipping {s}: not enough frames around SyncF for the sweep");
        }
    }
    Ok(aggregate_folds(folds, fps))
}

fn recall_file(out: &Path, class: Maneuver) -> PathBuf {
    out.join(format!("recall_{}.csv", class.short_name()))
}

fn recall_at(curve: &RecallCurve, offset: i64) -> Option<f64> {
    curve.at_offset(offset).map(|p| p.recall)
}

fn format_recall(r: Option<f64>) -> String {
    r.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"))
}

/// Recall one second before SyncF and at SyncF, per lane-change class.
fn summary(curves: &[RecallCurve], protocol: &ProtocolConfig, fps: u32) -> (String, String) {
    let mode = protocol.features.mode.tag();
    let mut table = format!("{:<6} {:<6} {:>12} {:>12}\n", "class", "mode", "t=-1.0s", "t=0s");
    let mut csv = String::from("class,mode,recall_at_minus_1s,recall_at_0s\n");
    for curve in curves {
        let early = recall_at(curve, -i64::from(fps));
        let at = recall_at(curve, 0);
        let _ = writeln!(
            table,
            "{:<6} {:<6} {:>12} {:>12}",
            curve.positive.short_name(),
            mode,
            format_recall(early),
            format_recall(at)
        );
        let _ = writeln!(
            csv,
            "{},{mode},{},{}",
            curve.positive.short_name(),
            early.map_or(String::new(), |v| v.to_string()),
            at.map_or(String::new(), |v| v.to_string())
        );
    }
    (table, csv)
}

fn write_curves(out: &Path, curves: &[RecallCurve], fps: u32) -> Result<()> {
    for curve in curves {
        write_recall_csv(curve, fps, &recall_file(out, curve.positive))?;
    }
    Ok(())
}

fn gaze_quality(corpus: &Corpus, fps: u32, window: f64, stride: f64, out: &Path) -> Result<()> {
    let drives: Vec<_> = corpus.drives.iter().filter(|d| d.annotated().is_some()).collect();
    if drives.is_empty() {
        bail!("--gaze-quality needs drives with a ground-truth scanpath");
    }
    let pairs: Vec<(&[GazeZone], &[GazeZone])> = drives
        .iter()
        .map(|d| {
            let truth = d.scanpath(GazeSource::Annotated).map(|s| s.zones());
            truth.map(|t| (t, d.estimated().zones()))
        })
        .collect::<gaze_dynamics::Result<_>>()?;
    let dist = metric_distributions(&pairs, fps, window, stride)?;

    let truth: Vec<GazeZone> = pairs.iter().flat_map(|p| p.0.iter().copied()).collect();
    let est: Vec<GazeZone> = pairs.iter().flat_map(|p| p.1.iter().copied()).collect();
    let cm = ConfusionMatrix::from_zones(&truth, &est)?;

    write_distributions_csv(&dist, &out.join("distributions.csv"))?;
    write_confusion_csv(&cm, &out.join("confusion.csv"))?;
    println!(
        "gaze quality: {} windows, weighted accuracy {:.3}",
        dist.windows,
        weighted_accuracy(&cm)
    );
    Ok(())
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let protocol = validated(&args.protocol)?;
    let run = RunConfig::new(
        "eval",
        json!({
            "manifest": args.manifest,
            "model": args.model,
            "cv": args.cv,
            "gaze_quality": args.gaze_quality,
            "quality_window_seconds": args.quality_window,
            "quality_stride_seconds": args.quality_stride,
            "out": args.out,
            "protocol": protocol,
        }),
    );
    let (corpus, fps) = load(&args.manifest)?;

    let (curves, traces, samples) = if args.cv {
        let report = cross_validate(&corpus, &protocol, fps)?;
        let samples: Vec<ClassifiedSample> = report.folds.iter().flat_map(|f| f.samples.iter().cloned()).collect();
        (Some(report.pooled), Some(report.traces), samples)
    } else if let Some(model) = &args.model {
        let models = load_models(model, &protocol, fps)?;
        let samples = classify_corpus(&corpus, &models, &protocol)?;
        let curves = Maneuver::LANE_CHANGES
            .iter()
            .map(|&m| recall_curve(&samples, m, fps))
            .collect();
        (Some(curves), Some(confidence_traces(&samples, fps)), samples)
    } else {
        (None, None, Vec::new())
    };

    if let (Some(curves), Some(traces)) = (&curves, &traces) {
        write_curves(&args.out, curves, fps)?;
        write_traces_csv(traces, fps, &args.out.join("traces.csv"))?;
        write_predictions_csv(&samples, fps, &args.out.join("predictions.csv"))?;
        let (table, csv) = summary(curves, &protocol, fps);
        write_atomic(&args.out.join("summary.csv"), csv.as_bytes())?;
        print!("{table}");
    }
    if args.gaze_quality {
        gaze_quality(&corpus, fps, args.quality_window, args.quality_stride, &args.out)?;
    }
    run.write(&args.out)?;
    Ok(())
}

pub fn cv(args: &CvArgs) -> Result<()> {
    let protocol = validated(&args.protocol)?;
    let run = RunConfig::new(
        "cv",
        json!({ "manifest": args.manifest, "out": args.out, "protocol": protocol }),
    );
    let (corpus, fps) = load(&args.manifest)?;
    let report = cross_validate(&corpus, &protocol, fps)?;

    let mut folds_csv = String::from("held_out,class,positives_at_0s,recall_at_minus_1s,recall_at_0s\n");
    for fold in &report.folds {
        let dir = args.out.join("folds").join(&fold.held_out);
        write_curves(&dir, &fold.curves, fps)?;
        save_model(
            &ModelSet {
                fps,
                config: protocol.features,
                models: fold.models.clone(),
            },
            &dir.join("models.json"),
        )?;
        for curve in &fold.curves {
            let _ = writeln!(
                folds_csv,
                "{},{},{},{},{}",
                fold.held_out,
                curve.positive.short_name(),
                curve.at_offset(0).map_or(0, |p| p.positives),
                recall_at(curve, -i64::from(fps)).map_or(String::new(), |v| v.to_string()),
                recall_at(curve, 0).map_or(String::new(), |v| v.to_string()),
            );
        }
    }
    write_atomic(&args.out.join("folds.csv"), folds_csv.as_bytes())?;
    write_curves(&args.out, &report.pooled, fps)?;
    write_traces_csv(&report.traces, fps, &args.out.join("traces.csv"))?;
    let (table, csv) = summary(&report.pooled, &protocol, fps);
    write_atomic(&args.out.join("summary.csv"), csv.as_bytes())?;
    run.write(&args.out)?;
    print!("{table}");
    Ok(())
}
