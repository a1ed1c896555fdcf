use std::path::Path;
use std::process::{Command, Output};

use edbench::eval::EvalReport;
use edbench::models::{Checkpoint, FittedModel, Scenario};
use edbench::pipeline::{TrainLog, CHECKPOINT_FILE, COMPARISON_TEXT, DATA_ROOT_ENV, REPORT_JSON, REPORT_TEXT, TRAIN_LOG_FILE};

const CONFIG: &str = r#"{
    "synth": {"n_patients": 250, "sampling_rate": 50},
    "build": {"min_count": 5, "folds": {"n_folds": 10, "val_fold": 8, "test_fold": 9}},
    "model": {"tree": {"n_trees": 10}, "deep": {"epochs": 1, "d_model": 8, "n_blocks": 1, "sampling_rate_target": 25}},
    "scenarios": ["routine_tree", "wave_routine_deep"],
    "compare": [["wave_routine_deep", "routine_tree"]],
    "bootstrap": {"n_iter": 100}
}"#;

fn edbench(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edbench"))
        .args(args)
        .env(DATA_ROOT_ENV, root)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> T {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn full_run_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let config = root.join("exp.json");
    std::fs::write(&config, CONFIG).unwrap();
    let c = config.to_str().unwrap();

    ok(&edbench(root, &["synth", "--config", c]));
    assert!(root.join("sources").is_dir(), "data root comes from the environment");
    ok(&edbench(root, &["build", "--config", c]));
    ok(&edbench(root, &["train", "--config", c]));
    ok(&edbench(root, &["eval", "--config", c]));
    let summary = ok(&edbench(root, &["report", "--config", c]));
    assert!(summary.contains("ECG waveforms + clinical routine data"));
    assert!(root.join("runs").join(COMPARISON_TEXT).is_file());

    for s in [Scenario::RoutineTree, Scenario::WaveRoutineDeep] {
        let d = root.join("runs").join(s.name());
        let report: EvalReport = read_json(&d.join(REPORT_JSON));
        let text = std::fs::read_to_string(d.join(REPORT_TEXT)).unwrap();
        assert_eq!(text, report.to_text(), "{s}: text report disagrees with JSON");
        assert!(report.diagnoses.labels.iter().chain(&report.deterioration.labels).all(|l| l
            .auroc
            .is_none_or(|iv| iv.lo <= iv.point && iv.point <= iv.hi)));
    }

    // One booster per label trained; every other label is listed as skipped.
    let ckpt = Checkpoint::load(&root.join("runs/routine_tree").join(CHECKPOINT_FILE)).unwrap();
    let log: TrainLog = read_json(&root.join("runs/routine_tree").join(TRAIN_LOG_FILE));
    let FittedModel::Tree { boosters, .. } = &ckpt.model else {
        panic!("tree scenario stored a deep model");
    };
    let fitted = boosters.iter().filter(|b| b.is_some()).count();
    assert_eq!(fitted, log.n_models);
    assert_eq!(fitted + log.skipped.len(), ckpt.label_names.len());
    assert!(fitted > 0);

    // Rebuilding with another vocabulary threshold changes the label space;
    // evaluating the old checkpoint must then be refused.
    let rebuilt = CONFIG.replace(r#""min_count": 5"#, r#""min_count": 40"#);
    std::fs::write(&config, rebuilt).unwrap();
    ok(&edbench(root, &["build", "--config", c]));
    let out = edbench(root, &["eval", "--config", c, "--scenario", "routine_tree"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("label"));
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    assert_eq!(edbench(root, &["train", "--scenario", "nope"]).status.code(), Some(2));
    assert_eq!(edbench(root, &["synth", "--profile", "huge"]).status.code(), Some(2));
    assert_eq!(edbench(root, &["frobnicate"]).status.code(), Some(2));
    let bad = root.join("bad.json");
    std::fs::write(&bad, r#"{"seeed": 3}"#).unwrap();
    assert_eq!(edbench(root, &["synth", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn missing_inputs_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = edbench(dir.path(), &["build"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn divergence_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let config = root.join("exp.json");
    let diverging = CONFIG.replace(r#""epochs": 1"#, r#""epochs": 1, "lr": 1e300"#);
    std::fs::write(&config, diverging).unwrap();
    let c = config.to_str().unwrap();
    ok(&edbench(root, &["synth", "--config", c]));
    ok(&edbench(root, &["build", "--config", c]));
    let out = edbench(root, &["train", "--config", c, "--scenario", "wave_routine_deep"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}
