use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn flakelex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flakelex"))
        .args(args)
        .env_remove("FLAKELEX_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = flakelex(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_csv(path: &Path, rows: &[(&str, &str, &str, &str)]) {
    let mut w = csv::Writer::from_path(path).unwrap();
    w.write_record(["project", "qualified_name", "label", "body"]).unwrap();
    for r in rows {
        w.write_record([r.0, r.1, r.2, r.3]).unwrap();
    }
    w.flush().unwrap();
}

#[test]
fn unknown_classifier_is_a_usage_error() {
    let corpus = data("mini-corpus.csv");
    let out = flakelex(&["train", "--corpus", s(&corpus), "--classifier", "xgboost", "--out", "/tmp/never.flx"]);
    assert_eq!(out.status.code(), Some(2));
    let out = flakelex(&["eval", "--corpus", s(&corpus), "--classifiers", "rf,nope"]);
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(&cfg, "classifiers = rf, nope\n").unwrap();
    let out = flakelex(&["--config", s(&cfg), "eval", "--corpus", s(&corpus)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(flakelex(&["rank"]).status.code(), Some(2));
}

#[test]
fn eval_report_has_exactly_the_documented_fields() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["ingest", "--corpus", s(&data("mini-corpus.csv")), "--split-dir", s(d)]);
    let model = d.join("model.flx");
    ok(&["train", "--corpus", s(&d.join("train.csv")), "--classifier", "rf", "--seed", "42", "--out", s(&model)]);
    assert!(d.join("model.flx.meta.json").exists());
    let report = d.join("report.json");
    ok(&["eval", "--model", s(&model), "--test", s(&d.join("test.csv")), "--json", s(&report)]);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, ["auc", "classifier", "dataset", "f1", "fn", "fp", "mcc", "precision", "recall", "seed", "tn", "tp"]);
    assert_eq!(v["classifier"], "rf");
    assert_eq!(v["seed"], 42);
    let total: u64 = ["tp", "fp", "fn", "tn"].iter().map(|k| v[k].as_u64().unwrap()).sum();
    assert_eq!(total, 8);
}

#[test]
fn predict_lines_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let model = d.join("m.flx");
    ok(&["train", "--corpus", s(&data("mini-corpus.csv")), "--classifier", "lr", "--out", s(&model)]);

    let unknown = d.join("unknown.csv");
    write_csv(
        &unknown,
        &[
            ("x", "x.A.a", "unknown", "Thread.sleep(100);"),
            ("x", "x.A.b", "unknown", "assertEquals(1, f());"),
            ("x", "x.A.c", "unknown", "server.start();"),
        ],
    );
    let out = ok(&["predict", "--model", s(&model), "--corpus", s(&unknown)]);
    let lines: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0]["qualified_name"], "x.A.a");
    assert!(lines.iter().all(|l| l["score"].is_f64() && l["label"].is_string()));

    let empty = d.join("empty.csv");
    write_csv(&empty, &[]);
    assert_eq!(ok(&["predict", "--model", s(&model), "--corpus", s(&empty)]), "");

    // Graft a vocabulary built under another ablation onto the model.
    let vocab = d.join("vocab.json");
    ok(&["featurize", "--corpus", s(&data("mini-corpus.csv")), "--ablation", "no-stemming", "--out", s(&d.join("m.jsonl")), "--vocab-out", s(&vocab)]);
    let mut bundle: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    bundle["vocabulary"] = serde_json::from_str(&std::fs::read_to_string(&vocab).unwrap()).unwrap();
    bundle["ablation"] = "no-stemming".into();
    let bad = d.join("bad.flx");
    std::fs::write(&bad, bundle.to_string()).unwrap();
    let out = flakelex(&["predict", "--model", s(&bad), "--corpus", s(&unknown)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mismatch"));
}

#[test]
fn featurize_writes_one_line_per_test() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("matrix.jsonl");
    ok(&["featurize", "--corpus", s(&data("mini-corpus.csv")), "--out", s(&out)]);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 40);
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    for key in ["qualified_name", "label", "loc", "keyword_total", "kw", "tok"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
    let kw_sum: u64 = first["kw"].as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(kw_sum, first["keyword_total"].as_u64().unwrap());
}

#[test]
fn tokenize_show_streams_jsonl() {
    let out = ok(&["tokenize", "--corpus", s(&data("mini-corpus.csv")), "--show"]);
    assert_eq!(out.lines().count(), 40);
    assert_eq!(ok(&["tokenize", "--text", "getJobId()"]), "job id\n");
    assert_eq!(ok(&["tokenize", "--text", "getJobId()", "--no-stop-words"]), "get job id\n");
    assert_eq!(ok(&["--json", "tokenize", "--text", "HTTPServer2", "--no-stem"]), "[\"http\",\"server\",\"2\"]\n");
}

#[test]
fn rank_csv_columns_and_data_dir() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("ranking.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_flakelex"))
        .args(["rank", "--corpus", "mini-corpus.csv", "--top", "20", "--csv", s(&csv_path), "--quiet"])
        .env("FLAKELEX_DATA_DIR", data(""))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert!(text.starts_with("feature,info_gain,tests,flaky,nonflaky\n"));
    assert_eq!(text.lines().count(), 21);
    let cmp = ok(&["rank", "--corpus", s(&data("mini-corpus.csv")), "--top", "20", "--compare", s(&csv_path)]);
    assert!(cmp.contains("overlap with"));
    assert!(cmp.contains("20/20"));
}

#[test]
fn classifier_lists_select_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = s(dir.path());
    let corpus = data("mini-corpus.csv");
    ok(&["-q", "eval", "--corpus", s(&corpus), "--classifiers", "rf, lda", "--out-dir", o]);
    let csv = std::fs::read_to_string(dir.path().join("classifiers.csv")).unwrap();
    let names: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(names, ["rf", "lda"]);
    ok(&["-q", "ablate", "--corpus", s(&corpus), "--classifiers", "all", "--out-dir", o]);
    let csv = std::fs::read_to_string(dir.path().join("ablation.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 9 * 8);
    assert!(csv.lines().nth(1).unwrap().starts_with("all-features,rf,"));
    assert!(csv.lines().last().unwrap().starts_with("no-identifiers,perceptron,"));
}

#[test]
fn crossval_rejects_non_flaky_validation() {
    let corpus = data("mini-corpus.csv");
    let out = flakelex(&["crossval", "--train", s(&corpus), "--validation", s(&corpus), "--mode", "inter"]);
    assert_eq!(out.status.code(), Some(1));
}

fn run_suite(out: &Path) {
    let corpus = data("mini-corpus.csv");
    let validation = data("mini-validation.csv");
    let o = s(out);
    ok(&["-q", "eval", "--corpus", s(&corpus), "--out-dir", o]);
    ok(&["-q", "ablate", "--corpus", s(&corpus), "--out-dir", o]);
    ok(&["-q", "rank", "--corpus", s(&corpus), "--csv", s(&out.join("ranking.csv"))]);
    for mode in ["intra", "inter"] {
        ok(&["-q", "crossval", "--train", s(&corpus), "--validation", s(&validation), "--mode", mode, "--out-dir", o]);
    }
    ok(&["-q", "train", "--corpus", s(&corpus), "--classifier", "rf", "--out", s(&out.join("model.flx"))]);
    ok(&["-q", "predict", "--model", s(&out.join("model.flx")), "--corpus", s(&validation), "--out", s(&out.join("predictions.jsonl"))]);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_suite(a.path());
    run_suite(b.path());
    let mut names: Vec<String> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| !n.ends_with(".meta.json"))
        .collect();
    names.sort();
    assert!(names.len() >= 20, "{names:?}");
    for n in &names {
        let x = std::fs::read(a.path().join(n)).unwrap();
        let y = std::fs::read(b.path().join(n)).unwrap();
        assert!(x == y, "{n} differs between runs");
    }
}
