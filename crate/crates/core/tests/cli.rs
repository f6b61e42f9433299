use std::path::Path;
use std::process::{Command, Output};

fn emoforge(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emoforge"))
        .args(args)
        .current_dir(dir)
        .env_remove("EMOFORGE_SEED")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = emoforge(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn synth_split_train_predict_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "synth",
            "--out",
            "corpus.csv",
            "--docs",
            "600",
            "--seed",
            "4",
        ],
    );
    let summary: serde_json::Value =
        serde_json::from_str(&ok(d, &["ingest", "--input", "corpus.csv"])).unwrap();
    assert_eq!(summary["total"], 600);
    assert_eq!(summary["counts"]["positive"], 200);

    let split = ok(d, &["split", "--input", "corpus.csv", "--seed", "4"]);
    assert_eq!(split.trim(), "train 420  test 180");
    for f in ["train.csv", "test.csv", "split.json"] {
        assert!(d.join(f).is_file());
    }

    ok(
        d,
        &[
            "train",
            "--model",
            "logreg",
            "--max-features",
            "200",
            "--seed",
            "4",
        ],
    );
    assert!(d.join("model-logreg.json").is_file());
    let label = ok(
        d,
        &[
            "predict",
            "--model",
            "model-logreg.json",
            "--text",
            "i am so happy",
        ],
    );
    assert_eq!(label.trim(), "positive");

    std::fs::write(
        d.join("lines.txt"),
        "so sad and angry today\n\nmeeting schedule at the office\n",
    )
    .unwrap();
    let labels = ok(
        d,
        &[
            "predict",
            "--model",
            "model-logreg.json",
            "--input",
            "lines.txt",
        ],
    );
    assert_eq!(labels, "negative\nneutral\n");

    let report: serde_json::Value = serde_json::from_str(&ok(
        d,
        &["evaluate", "--model", "model-logreg.json", "--json"],
    ))
    .unwrap();
    assert!(report["accuracy"].as_f64().unwrap() >= 0.99);
    assert!(ok(d, &["evaluate", "--model", "model-logreg.json"]).contains("confusion"));
}

#[test]
fn train_without_split_artifacts_fails_naming_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = emoforge(dir.path(), &["train", "--model", "logreg"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("train.csv"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["train", "--model", "knn"][..],
        &["split", "--input", "x.csv", "--bogus"],
        &["predict", "--model", "m.json"],
        &["frobnicate"],
    ] {
        let out = emoforge(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn missing_model_file_is_operational_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = emoforge(
        dir.path(),
        &["predict", "--model", "nope.json", "--text", "hi"],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn seed_flag_and_environment_agree() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &["synth", "--out", "a.csv", "--docs", "90", "--seed", "11"],
    );
    let from_env = Command::new(env!("CARGO_BIN_EXE_emoforge"))
        .args(["synth", "--out", "b.csv", "--docs", "90"])
        .current_dir(d)
        .env("EMOFORGE_SEED", "11")
        .output()
        .unwrap();
    assert!(from_env.status.success());
    ok(
        d,
        &["synth", "--out", "c.csv", "--docs", "90", "--seed", "12"],
    );
    let read = |f: &str| std::fs::read_to_string(d.join(f)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_ne!(read("a.csv"), read("c.csv"));
}

#[test]
fn tagcloud_text_and_html() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("tiny.csv"),
        "text,label\ngood good bad,positive\ngood ok,positive\ngood bad good,positive\nawful,negative\n",
    )
    .unwrap();
    let text = ok(
        d,
        &[
            "tagcloud",
            "--input",
            "tiny.csv",
            "--label",
            "positive",
            "--max-words",
            "10",
        ],
    );
    assert_eq!(text, "bad (2)\ngood (5)\n");
    ok(
        d,
        &[
            "tagcloud",
            "--input",
            "tiny.csv",
            "--label",
            "positive",
            "--format",
            "html",
            "--out",
            "cloud.html",
        ],
    );
    let html = std::fs::read_to_string(d.join("cloud.html")).unwrap();
    assert!(html.starts_with("<html>") && html.trim_end().ends_with("</html>"));
    let out = emoforge(
        d,
        &["tagcloud", "--input", "tiny.csv", "--label", "neutral"],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn grid_command_writes_declared_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "synth",
            "--out",
            "corpus.csv",
            "--docs",
            "300",
            "--seed",
            "2",
        ],
    );
    std::fs::write(
        d.join("grid.json"),
        r#"{"corpus": "corpus.csv", "feature_counts": [50, 100], "classifiers": ["logreg", "dtree"],
            "run_cnn": false, "out_dir": "out"}"#,
    )
    .unwrap();
    let stdout = ok(d, &["grid", "--config", "grid.json", "--out", "out"]);
    assert!(stdout.contains("Decision tree"));
    let csv = std::fs::read_to_string(d.join("out/results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("features,classifier,accuracy,precision,recall,f_score")
    );
    assert_eq!(lines.count(), 4);

    std::fs::write(
        d.join("bad.json"),
        r#"{"corpus": "corpus.csv", "feature_counts": [100, 50]}"#,
    )
    .unwrap();
    assert_eq!(
        emoforge(d, &["grid", "--config", "bad.json"]).status.code(),
        Some(1)
    );
}
