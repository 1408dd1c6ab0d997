use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use msie_core::pipeline::{sha256_hex, Manifest};
use msie_core::{MetricReport, Pipeline, PipelineConfig, PipelineError, Stage};

/// A small synthetic city so end-to-end runs stay in the seconds range.
fn small_config(extra: &str) -> PipelineConfig {
    let base = r#"{
        "synth": {"n_listings": 300, "pois_per_category": 60},
        "cbow": {"dim": 16, "epochs": 2},
        "spatial": {"sdne": {"epochs": 10}},
        "regressor": {"epochs": 30}
    }"#;
    let mut value: serde_json::Value = serde_json::from_str(base).unwrap();
    merge(&mut value, serde_json::from_str(extra).unwrap());
    PipelineConfig::from_json(&value.to_string()).unwrap()
}

fn merge(into: &mut serde_json::Value, from: serde_json::Value) {
    match (into, from) {
        (serde_json::Value::Object(a), serde_json::Value::Object(b)) => {
            for (k, v) in b {
                merge(a.entry(k).or_insert(serde_json::Value::Null), v);
            }
        }
        (slot, v) => *slot = v,
    }
}

fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn evaluate_r2(dir: &Path) -> f64 {
    let text = std::fs::read_to_string(dir.join("metrics.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let test: MetricReport = serde_json::from_value(v["test"].clone()).unwrap();
    test.r2
}

#[test]
fn two_runs_are_byte_identical_and_a_new_seed_differs() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    Pipeline::new(small_config("{}"), dirs[0].path()).unwrap().run_all().unwrap();
    Pipeline::new(small_config("{}"), dirs[1].path()).unwrap().run_all().unwrap();
    Pipeline::new(small_config(r#"{"seed": 7}"#), dirs[2].path())
        .unwrap()
        .run_all()
        .unwrap();
    let (a, b, c) = (snapshot(dirs[0].path()), snapshot(dirs[1].path()), snapshot(dirs[2].path()));
    assert_eq!(a, b);
    let model = Path::new("model.json");
    assert_ne!(a[model], c[model]);
}

#[test]
fn manifest_records_every_stage_with_matching_hashes() {
    let dir = tempfile::tempdir().unwrap();
    Pipeline::new(small_config("{}"), dir.path()).unwrap().run_all().unwrap();
    let manifest = Manifest::load(dir.path());
    for stage in Stage::ALL {
        let record = manifest
            .stages
            .get(stage.name())
            .unwrap_or_else(|| panic!("no manifest entry for {}", stage.name()));
        assert!(!record.outputs.is_empty(), "{} wrote nothing", stage.name());
        for file in record.outputs.iter().chain(&record.inputs) {
            assert!(Path::new(&file.path).is_relative(), "{}", file.path);
            let bytes = std::fs::read(dir.path().join(&file.path)).unwrap();
            assert_eq!(sha256_hex(&bytes), file.sha256, "{}", file.path);
        }
    }
    let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(!text.contains(dir.path().to_str().unwrap()), "manifest leaks absolute paths");
}

#[test]
fn single_stage_runs_its_prerequisites_and_reruns_reproduce_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = Pipeline::new(small_config("{}"), dir.path()).unwrap();
    pipeline.run(Stage::Sentiment).unwrap();
    assert!(dir.path().join("sentiment.csv").exists());
    assert!(!dir.path().join("fused.tsv").exists());
    assert!(!dir.path().join("word_vectors.tsv").exists());

    let first = std::fs::read(dir.path().join("sentiment.csv")).unwrap();
    std::fs::remove_file(dir.path().join("sentiment.csv")).unwrap();
    pipeline.run(Stage::Sentiment).unwrap();
    assert_eq!(first, std::fs::read(dir.path().join("sentiment.csv")).unwrap());
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let err = PipelineConfig::from_json(r#"{"regressor": {"epoch": 3}}"#).unwrap_err();
    assert!(matches!(err, PipelineError::Config(_)));
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().contains("epoch"), "{err}");
}

#[test]
fn more_noise_means_lower_test_r2() {
    let r2: Vec<f64> = [0.05, 0.3, 1.0]
        .iter()
        .map(|noise| {
            let dir = tempfile::tempdir().unwrap();
            let cfg = small_config(&format!(r#"{{"synth": {{"noise_sd": {noise}, "n_listings": 500}}}}"#));
            Pipeline::new(cfg, dir.path()).unwrap().run(Stage::Evaluate).unwrap();
            evaluate_r2(dir.path())
        })
        .collect();
    assert!(r2[0] > r2[1] && r2[1] > r2[2], "{r2:?}");
}

#[test]
fn zero_signal_weights_give_no_predictive_power() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(r#"{"synth": {"n_listings": 500, "stat_w": 0.0, "text_w": 0.0, "spatial_w": 0.0}}"#);
    Pipeline::new(cfg, dir.path()).unwrap().run(Stage::Ablate).unwrap();
    let text = std::fs::read_to_string(dir.path().join("ablation_report.json")).unwrap();
    let reports: Vec<MetricReport> = serde_json::from_str(&text).unwrap();
    // The wider blocks overfit pure noise and can go well below zero; none
    // may show real skill.
    for r in &reports {
        assert!(r.r2 < 0.1, "{}: {}", r.variant, r.r2);
    }
    assert!(reports[0].r2.abs() < 0.1, "S: {}", reports[0].r2);
}
