use ctxprior::cli::{Provenance, Report};
use ctxprior::expectations::SpecTable;
use ctxprior::fusion::AccuracyTable;
use ctxprior::ChannelSet;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

const BASE: &str = r#"
seed = 7

[synth]
n_scenes = 200

[synth.detection]
n_scenes = 400

[expectations]
n_splits = 20
ceiling_resamples = 50
"#;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn ctxprior(config: &Path, args: &[&str]) -> Run {
    let output = Command::new(env!("CARGO_BIN_EXE_ctxprior"))
        .args(args)
        .arg("--config")
        .arg(config)
        .output()
        .expect("binary runs");
    Run {
        code: output.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&output.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
    }
}

fn workspace(extra: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, format!("{BASE}\n{extra}")).unwrap();
    (dir, config)
}

fn ok(run: Run) -> Run {
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    run
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    files
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> T {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fit_writes_one_model_per_category_and_dimension() {
    let (dir, config) = workspace("");
    let text = std::fs::read_to_string(&config).unwrap().replace(
        "[expectations]\n",
        "[expectations]\nfit_specs = [\"NC\"]\n",
    );
    std::fs::write(&config, text).unwrap();
    ok(ctxprior(&config, &["synth"]));
    let fit = ok(ctxprior(&config, &["fit"]));
    let models: Vec<_> = std::fs::read_dir(dir.path().join("out/models")).unwrap().collect();
    assert_eq!(models.len(), 10);
    assert!(dir.path().join("out/models/car_likelihood_NC.json").exists());
    assert!(dir.path().join("out/fit/summary.json").exists());
    assert!(fit.stdout.lines().count() >= 10);
}

#[test]
fn missing_ratings_file_is_a_data_error_naming_the_path() {
    let (dir, config) = workspace("");
    ok(ctxprior(&config, &["synth"]));
    std::fs::remove_file(dir.path().join("out/data/ratings.csv")).unwrap();
    let run = ctxprior(&config, &["fit"]);
    assert_eq!(run.code, 3);
    assert!(run.stderr.contains("ratings.csv"), "{}", run.stderr);
    assert!(!dir.path().join("out/models").exists());
}

#[test]
fn configuration_errors_exit_with_two() {
    let (_dir, config) = workspace("");
    let text = std::fs::read_to_string(&config).unwrap().replace("n_scenes = 200", "n_scenes = 0");
    std::fs::write(&config, text).unwrap();
    assert_eq!(ctxprior(&config, &["synth"]).code, 2);

    let (_dir, config) = workspace("bogus_key = 1\n");
    let text = std::fs::read_to_string(&config).unwrap();
    std::fs::write(&config, format!("bogus_key = 1\n{text}")).unwrap();
    assert_eq!(ctxprior(&config, &["synth"]).code, 2);

    let (_dir, config) = workspace("");
    assert_eq!(ctxprior(&config, &["synth", "--jobs", "0"]).code, 2);

    let bare = Command::new(env!("CARGO_BIN_EXE_ctxprior")).arg("fit").output().unwrap();
    assert_eq!(bare.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical_across_output_directories() {
    let (dir, config) = workspace("");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let out = out.to_str().unwrap();
        for cmd in ["synth", "fit"] {
            ok(ctxprior(&config, &[cmd, "--out", out]));
        }
    }
    let (ta, tb) = (tree(&a), tree(&b));
    assert!(ta.keys().any(|p| p.starts_with("models")));
    assert_eq!(ta, tb);
}

#[test]
fn evaluate_reports_requested_specs_and_ceiling() {
    let (dir, config) = workspace("");
    ok(ctxprior(&config, &["synth"]));
    ok(ctxprior(&config, &["evaluate"]));
    let table: Provenance<SpecTable> = read_json(&dir.path().join("out/evaluate/car_likelihood.json"));
    assert_eq!(table.seed, 7);
    assert_eq!(table.result.rows.len(), 7);
    assert_eq!(table.result.best, ChannelSet::NC);
    assert!(table.result.ceiling.is_some());

    let text = std::fs::read_to_string(&config).unwrap().replace(
        "[expectations]\n",
        "[expectations]\neval_specs = [\"C\"]\n",
    );
    std::fs::write(&config, text).unwrap();
    ok(ctxprior(&config, &["evaluate"]));
    let csv = std::fs::read_to_string(dir.path().join("out/evaluate/person_scale.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(rows, ["Ceil", "C"]);
}

#[test]
fn baseline_only_feature_set_reproduces_the_baseline() {
    let extra = r#"
[fusion]
targets = ["car"]

[[fusion.feature_sets]]
name = "none"
categories = []
dimensions = []

[[fusion.feature_sets]]
name = "lklhd"
categories = ["target"]
dimensions = ["likelihood"]
"#;
    let (dir, config) = workspace(extra);
    for cmd in ["synth", "fit", "augment"] {
        ok(ctxprior(&config, &[cmd]));
    }
    let table: Provenance<AccuracyTable> = read_json(&dir.path().join("out/augment/accuracy.json"));
    assert!(!table.result.rows.is_empty());
    for row in &table.result.rows {
        let none = row.augmentations.iter().find(|a| a.feature_set == "none").unwrap();
        assert_eq!(none.accuracy, row.baseline);
        assert_eq!(none.delta, 0.0);
    }
    assert!(dir.path().join("out/augment/roc/cnn__car__all__lklhd.csv").exists());
}

#[test]
fn zero_context_signal_gives_no_gain() {
    let extra = "[fusion]\ntargets = [\"car\"]\n";
    let (dir, config) = workspace(extra);
    let text = std::fs::read_to_string(&config)
        .unwrap()
        .replace("[synth.detection]\nn_scenes = 400", "[synth.detection]\nn_scenes = 5000\ncontext_weight = 0.0");
    std::fs::write(&config, text).unwrap();
    for cmd in ["synth", "fit", "augment"] {
        ok(ctxprior(&config, &[cmd]));
    }
    let table: Provenance<AccuracyTable> = read_json(&dir.path().join("out/augment/accuracy.json"));
    for row in &table.result.rows {
        for a in &row.augmentations {
            assert!(a.delta.abs() < 1.0, "{} {}: delta {}", row.scene_set, a.feature_set, a.delta);
        }
    }
}

#[test]
fn report_summarises_reliability_and_weights() {
    let (dir, config) = workspace("");
    for cmd in ["synth", "fit", "report"] {
        ok(ctxprior(&config, &[cmd]));
    }
    let report: Provenance<Report> = read_json(&dir.path().join("out/report/report.json"));
    assert_eq!(report.result.reliability.len(), 10);
    for row in &report.result.reliability {
        assert!(row.corrected > 0.7 && row.corrected <= 1.0, "{row:?}");
    }
    assert!(report.result.nontarget_weights.is_some());
}

#[test]
fn seed_flag_overrides_the_config() {
    let (dir, config) = workspace("");
    ok(ctxprior(&config, &["synth", "--seed", "8", "--out", dir.path().join("s8").to_str().unwrap()]));
    let provenance: serde_json::Value = read_json(&dir.path().join("s8/data/provenance.json"));
    assert_eq!(provenance["seed"], 8);
    assert_eq!(provenance["config"]["synth"]["seed"], 8);
}
