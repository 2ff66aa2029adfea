use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_lionlstm");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

const FAST: &str = r#"{
  "data": "series.csv",
  "lag": 6,
  "la": {"n": 4, "nrm": 2, "epochs": 3},
  "ffnn": {"learning_rate": 0.5, "epochs": 20},
  "lstm": {"learning_rate": 0.5, "epochs": 3}
}"#;

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&run(dir.path(), &["synth", "--months", "60", "--out", "series.csv"])),
        0
    );
    std::fs::write(dir.path().join("fast.json"), FAST).unwrap();
    dir
}

#[test]
fn synth_writes_requested_months() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["synth", "--months", "36", "--seed", "5", "--out", "data/s.csv"],
    );
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(dir.path().join("data/s.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("date,gwl_m,rainfall_mm"));
    assert_eq!(lines.count(), 36);
}

#[test]
fn usage_errors_exit_2() {
    let dir = workspace();
    let p = dir.path();
    assert_eq!(code(&run(p, &["synth", "--months", "23", "--out", "x.csv"])), 2);
    assert_eq!(code(&run(p, &["synth", "--months", "30"])), 2);
    assert_eq!(code(&run(p, &["train", "--model", "gru", "--config", "fast.json"])), 2);
    assert_eq!(
        code(&run(p, &["train", "--model", "ffnn", "--config", "missing.json"])),
        2
    );
    assert_eq!(code(&run(p, &["train", "--model", "ffnn"])), 2);
    assert_eq!(code(&run(p, &["frobnicate"])), 2);

    std::fs::write(p.join("typo.json"), r#"{"data": "series.csv", "lagg": 3}"#).unwrap();
    let out = run(p, &["train", "--model", "ffnn", "--config", "typo.json"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("lagg"));

    std::fs::write(
        p.join("bad_la.json"),
        r#"{"data": "series.csv", "la": {"n": 3, "nrm": 3}}"#,
    )
    .unwrap();
    assert_eq!(
        code(&run(p, &["train", "--model", "lstm-la", "--config", "bad_la.json"])),
        2
    );
}

#[test]
fn data_errors_exit_3() {
    let dir = workspace();
    let p = dir.path();
    std::fs::write(p.join("gap.csv"), "date,gwl_m,rainfall_mm\n2001-01,5,1\n2001-03,5,1\n").unwrap();
    let out = run(
        p,
        &["train", "--model", "ffnn", "--config", "fast.json", "--data", "gap.csv"],
    );
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("2001-02"));

    std::fs::write(p.join("nan.csv"), "date,gwl_m,rainfall_mm\n2001-01,NaN,1\n").unwrap();
    assert_eq!(
        code(&run(
            p,
            &["train", "--model", "ffnn", "--config", "fast.json", "--data", "nan.csv"]
        )),
        3
    );
    assert_eq!(
        code(&run(
            p,
            &[
                "train",
                "--model",
                "ffnn",
                "--config",
                "fast.json",
                "--data",
                "none.csv"
            ]
        )),
        3
    );
    assert_eq!(code(&run(p, &["evaluate", "--model", "nowhere/ffnn.model.json"])), 3);
}

#[test]
fn diverging_training_exits_4() {
    let dir = workspace();
    let p = dir.path();
    std::fs::write(
        p.join("hot.json"),
        r#"{"data": "series.csv", "lag": 6, "ffnn": {"learning_rate": 1e6, "epochs": 50}}"#,
    )
    .unwrap();
    let out = run(p, &["train", "--model", "ffnn", "--config", "hot.json"]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn train_evaluate_forecast_round() {
    let dir = workspace();
    let p = dir.path();
    for kind in ["ffnn", "lstm", "lstm-la"] {
        let out = run(p, &["train", "--model", kind, "--config", "fast.json"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let trace = std::fs::read_to_string(p.join("out/lstm_la.trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("epoch,best_rmse,evaluations"));
    assert_eq!(trace.lines().count(), 1 + 3);
    let gd_trace = std::fs::read_to_string(p.join("out/lstm.trace.csv")).unwrap();
    assert_eq!(gd_trace.lines().count(), 1 + 4);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p.join("out/lstm_la.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["data"]["records"], 60);
    assert_eq!(manifest["data"]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["evaluations"]["lstm_la"], 2 * 4 + 3 * (2 * 2 + 2));

    let out = run(p, &["evaluate", "--model", "out/lstm.model.json"]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["model"], "lstm");
    assert_eq!(report["test_samples"], 54 - 43);
    let acc = report["accuracy_pct"].as_f64().unwrap();
    assert!((0.0..=100.0).contains(&acc));

    let out = run(
        p,
        &[
            "forecast",
            "--model",
            "out/lstm_la.model.json",
            "--model",
            "out/ffnn.model.json",
            "--horizon",
            "3",
        ],
    );
    assert_eq!(code(&out), 0);
    assert!(!String::from_utf8_lossy(&out.stderr).contains("warning"));
    let csv = std::fs::read_to_string(p.join("out/forecast.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "date,observed,ffnn,lstm,lstm_la");
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("2005-01,,"));
    assert_eq!(rows[1].split(',').nth(3), Some(""));
}

#[test]
fn compare_and_crossval_outputs() {
    let dir = workspace();
    let p = dir.path();
    let out = run(p, &["compare", "--config", "fast.json", "--out", "c"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p.join("c/compare.json")).unwrap()).unwrap();
    for key in ["ffnn", "lstm", "lstm_la"] {
        assert!(report[key]["rmse"].as_f64().unwrap() >= report[key]["mae"].as_f64().unwrap());
    }
    let series = std::fs::read_to_string(p.join("c/compare_test.csv")).unwrap();
    assert_eq!(series.lines().count(), 1 + 11);

    let out = run(
        p,
        &[
            "crossval",
            "--config",
            "fast.json",
            "--out",
            "v",
            "--models",
            "ffnn,lstm-la",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let folds = std::fs::read_to_string(p.join("v/crossval_folds.csv")).unwrap();
    assert_eq!(folds.lines().next(), Some("model,fold,accuracy_pct"));
    assert_eq!(folds.lines().filter(|l| l.starts_with("ffnn,")).count(), 5);
    assert_eq!(folds.lines().filter(|l| l.starts_with("lstm_la,")).count(), 5);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p.join("v/crossval.json")).unwrap()).unwrap();
    let s = &summary["lstm_la"];
    assert!(s["min"].as_f64() <= s["median"].as_f64() && s["median"].as_f64() <= s["max"].as_f64());
}
