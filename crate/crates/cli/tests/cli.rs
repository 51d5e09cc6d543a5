use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn gazedyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gazedyn"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = gazedyn(args);
    assert!(
        out.status.success(),
        "gazedyn {} failed:\n{}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small corpus with the reference counts of the first `drivers` drivers.
fn synth(dir: &Path, drivers: usize, seed: u64, extra: &[&str]) -> PathBuf {
    let out = dir.join(format!("corpus-{drivers}-{seed}"));
    let (d, sd) = (drivers.to_string(), seed.to_string());
    let mut args = vec!["synth", "--drivers", d.as_str(), "--seed", sd.as_str(), "--out", s(&out)];
    args.extend_from_slice(extra);
    ok(&args);
    out.join("manifest.json")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_is_deterministic_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        ok(&["synth", "--drivers", "2", "--seed", "9", "--out", s(dir)]);
    }
    for rel in ["manifest.json", "driver-1/drive-1.estimated.json", "driver-2/drive-1.events.json"] {
        assert_eq!(fs::read(a.join(rel)).unwrap(), fs::read(b.join(rel)).unwrap(), "{rel}");
    }
    let c = tmp.path().join("c");
    ok(&["synth", "--drivers", "2", "--seed", "10", "--out", s(&c)]);
    let rel = "driver-1/drive-1.estimated.json";
    assert_ne!(fs::read(a.join(rel)).unwrap(), fs::read(c.join(rel)).unwrap());
}

#[test]
fn identity_noise_leaves_streams_equal() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth(tmp.path(), 1, 3, &["--noise", "identity"]);
    let dir = manifest.parent().unwrap().join("driver-1");
    let annotated = read_json(&dir.join("drive-1.annotated.json"));
    let estimated = read_json(&dir.join("drive-1.estimated.json"));
    assert!(annotated["zones"].as_array().is_some_and(|z| !z.is_empty()));
    assert_eq!(annotated["zones"], estimated["zones"]);
}

#[test]
fn fit_writes_models_of_the_mode_dimension() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth(tmp.path(), 3, 4, &[]);
    for (mode, dim) in [("ga", 9), ("gd", 9), ("gdgf", 18)] {
        let out = tmp.path().join(mode);
        ok(&["fit", "--manifest", s(&manifest), "--mode", mode, "--out", s(&out)]);
        let models = read_json(&out.join("models.json"));
        let list = models["models"].as_array().unwrap();
        assert_eq!(list.len(), 3);
        for m in list {
            assert_eq!(m["mean"].as_array().unwrap().len(), dim, "{mode}");
        }
    }
}

#[test]
fn fit_names_the_missing_class() {
    let tmp = tempfile::tempdir().unwrap();
    let seed_corpus = synth(tmp.path(), 2, 5, &[]);
    let mut config = read_json(&seed_corpus.parent().unwrap().join("synth_config.json"));
    for d in config["drivers"].as_array_mut().unwrap() {
        d["right_lane_change"] = 0.into();
    }
    let config_path = tmp.path().join("no_rlc.json");
    fs::write(&config_path, config.to_string()).unwrap();
    let corpus = tmp.path().join("no_rlc");
    ok(&["synth", "--config", s(&config_path), "--out", s(&corpus)]);

    let out = gazedyn(&[
        "fit",
        "--manifest",
        s(&corpus.join("manifest.json")),
        "--out",
        s(&tmp.path().join("fit")),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("RightLaneChange"), "{stderr}");
    assert!(!tmp.path().join("fit/models.json").exists());
}

#[test]
fn predict_uses_a_fitted_model_and_rejects_other_modes() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth(tmp.path(), 2, 6, &[]);
    let fit = tmp.path().join("fit");
    ok(&["fit", "--manifest", s(&manifest), "--out", s(&fit)]);
    let model = fit.join("models.json");
    let pred = tmp.path().join("pred");
    ok(&["predict", "--manifest", s(&manifest), "--model", s(&model), "--out", s(&pred)]);
    let text = fs::read_to_string(pred.join("predictions.csv")).unwrap();
    // 24 lane changes across the first two reference drivers, 301 windows each.
    assert_eq!(text.lines().count(), 1 + 24 * 301);

    let out = gazedyn(&[
        "predict",
        "--manifest",
        s(&manifest),
        "--model",
        s(&model),
        "--mode",
        "gd",
        "--out",
        s(&tmp.path().join("bad")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cross_validation_writes_full_recall_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth(tmp.path(), 3, 7, &[]);
    let out = tmp.path().join("cv");
    ok(&["eval", "--cv", "--manifest", s(&manifest), "--out", s(&out)]);
    for class in ["LLC", "RLC"] {
        let text = fs::read_to_string(out.join(format!("recall_{class}.csv"))).unwrap();
        assert_eq!(text.lines().count(), 1 + 301, "{class}");
    }
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with("class,mode,recall_at_minus_1s,recall_at_0s\n"));

    let folds = tmp.path().join("folds");
    ok(&["cv", "--manifest", s(&manifest), "--out", s(&folds)]);
    for driver in ["driver-1", "driver-2", "driver-3"] {
        assert!(folds.join("folds").join(driver).join("models.json").exists());
    }
    assert_eq!(
        fs::read(folds.join("recall_LLC.csv")).unwrap(),
        fs::read(out.join("recall_LLC.csv")).unwrap()
    );
}

#[test]
fn gaze_quality_writes_distributions_and_confusion() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth(tmp.path(), 1, 8, &[]);
    let out = tmp.path().join("quality");
    let stdout = ok(&["eval", "--gaze-quality", "--manifest", s(&manifest), "--out", s(&out)]).stdout;
    assert!(String::from_utf8_lossy(&stdout).contains("weighted accuracy"));
    let dist = fs::read_to_string(out.join("distributions.csv")).unwrap();
    assert!(dist.lines().count() > 1);
    let confusion = fs::read_to_string(out.join("confusion.csv")).unwrap();
    assert!(confusion.lines().count() > 9);
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = tmp.path().join("missing.json");
    // Neither --model nor --cv.
    let out = gazedyn(&["eval", "--manifest", s(&manifest), "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    let out = gazedyn(&["fit", "--manifest", s(&manifest), "--mode", "xyz", "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_inputs_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gazedyn(&[
        "fit",
        "--manifest",
        s(&tmp.path().join("missing.json")),
        "--out",
        s(&tmp.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
