//! The `lobcast` binary end to end: exit codes and a synth → features →
//! labels → train → predict → evaluate → report/stats round trip.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

fn lobcast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lobcast")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Workspace {
    root: PathBuf,
}

impl Workspace {
    fn events(&self) -> PathBuf {
        self.root.join("events")
    }
    fn store(&self) -> PathBuf {
        self.root.join("store")
    }
}

/// Two stocks over three short days, generated and featurized once.
fn workspace() -> &'static Workspace {
    static WS: OnceLock<Workspace> = OnceLock::new();
    WS.get_or_init(|| {
        let root = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
        let _ = fs::remove_dir_all(&root);
        fs::create_dir_all(&root).unwrap();
        let ws = Workspace { root };
        let o = lobcast(&["synth", "--out", s(&ws.events()), "--stocks", "2", "--days", "3", "--events", "6000", "--seed", "4"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let o = lobcast(&["features", "--events", s(&ws.events()), "--out", s(&ws.store())]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        ws
    })
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    assert_eq!(code(&lobcast(&[])), 1);
    assert_eq!(code(&lobcast(&["bogus"])), 1);
    assert_eq!(code(&lobcast(&["synth"])), 1);
    assert_eq!(code(&lobcast(&["--help"])), 0);
    assert_eq!(code(&lobcast(&["evaluate", "--help"])), 0);

    let ws = workspace();
    let store_dir = ws.store();
    let store = s(&store_dir);
    assert_eq!(code(&lobcast(&["evaluate", "--features", store, "--set", "nonsense=1"])), 1);
    assert_eq!(code(&lobcast(&["evaluate", "--features", store, "--representation", "concat+ae"])), 1);
    assert_eq!(code(&lobcast(&["stats", "x.csv", "--treatment", "colour"])), 2, "missing file is a data error");
}

#[test]
fn data_errors_exit_2() {
    let ws = workspace();
    assert_eq!(code(&lobcast(&["evaluate", "--features", s(&ws.root.join("nowhere"))])), 2);
    assert_eq!(code(&lobcast(&["features", "--events", s(&ws.root.join("nowhere")), "--out", s(&ws.root.join("x"))])), 2);

    let lonely = ws.root.join("lonely");
    fs::create_dir_all(&lonely).unwrap();
    let file = lonely.join("S01_d01.events.csv");
    fs::copy(ws.events().join("S01_d01.events.csv"), &file).unwrap();
    assert_eq!(code(&lobcast(&["ingest", s(&file)])), 2, "event file without its sidecar");

    let bad_header = lonely.join("S02_d01.events.csv");
    fs::write(&bad_header, "time,kind,side,price,volume,ref\n").unwrap();
    fs::copy(ws.events().join("S02_d01.meta"), lonely.join("S02_d01.meta")).unwrap();
    assert_eq!(code(&lobcast(&["ingest", s(&bad_header)])), 2);
}

#[test]
fn divergent_training_exits_3() {
    let ws = workspace();
    let o = lobcast(&[
        "train",
        "--features",
        s(&ws.store()),
        "--output",
        s(&ws.root.join("diverge")),
        "--classifier",
        "mlp",
        "--representation",
        "last",
        "--set",
        "mlp.learning_rate=1e300",
        "--set",
        "mlp.epochs=1",
        "--set",
        "mlp.hidden=[8]",
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn labels_train_and_predict() {
    let ws = workspace();
    let labels = ws.root.join("labels");
    let o = lobcast(&["labels", "--features", s(&ws.store()), "--out", s(&labels), "--horizon", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(labels.join("labels.json")).unwrap()).unwrap();
    assert_eq!(manifest["streams"].as_array().unwrap().len(), 6);
    let first = fs::read_to_string(labels.join("S01_d01.labels.csv")).unwrap();
    assert!(first.lines().count() > 100);

    let run = ws.root.join("train");
    let o = lobcast(&[
        "train",
        "--features",
        s(&ws.store()),
        "--output",
        s(&run),
        "--classifier",
        "svm",
        "--representation",
        "last_mean",
        "--days",
        "1-2",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(run.join("model").join("bundle.json").exists());

    let preds = ws.root.join("predictions");
    let o = lobcast(&["predict", "--model", s(&run.join("model")), "--features", s(&ws.store()), "--out", s(&preds)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(preds.join("S02_d03.predictions.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("block_index,label,score_-1,score_0,score_+1"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 5);
    assert!(["-1", "0", "1"].contains(&row[1]));
}

#[test]
fn evaluate_report_stats_and_replay() {
    let ws = workspace();
    let run = |name: &str, classifier: &str| {
        let out = ws.root.join(name);
        let o = lobcast(&[
            "evaluate",
            "--features",
            s(&ws.store()),
            "--output",
            s(&out),
            "--classifier",
            classifier,
            "--representation",
            "last",
            "--horizon",
            "5",
            "--set",
            "mlp.hidden=[16]",
            "--set",
            "mlp.epochs=3",
            "--set",
            "slfn.hidden=30",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("leakage audit passed"));
        out
    };
    let svm = run("eval_svm", "svm");
    let slfn = run("eval_slfn", "slfn");
    let mlp = run("eval_mlp", "mlp");
    let results: Vec<PathBuf> = [&svm, &slfn, &mlp].iter().map(|d| d.join("results.csv")).collect();
    let csv = fs::read_to_string(&results[0]).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2, "header plus one row per anchored fold");

    let mut args = vec!["report"];
    args.extend(results.iter().map(|p| s(p)));
    let o = lobcast(&args);
    assert_eq!(code(&o), 0);
    let report = stdout(&o);
    for c in ["svm", "slfn", "mlp"] {
        assert!(report.contains(c), "{report}");
    }

    let mut args = vec!["stats"];
    args.extend(results.iter().map(|p| s(p)));
    let o = lobcast(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("Friedman over 2 datasets, 3 treatments"), "{text}");
    assert!(text.contains("Nemenyi CD"));

    let replay = ws.root.join("eval_svm_replay");
    let o = lobcast(&["evaluate", "--replay", s(&svm.join("manifest.json")), "--output", s(&replay)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(svm.join("results.csv")).unwrap(), fs::read(replay.join("results.csv")).unwrap());
    for fold in ["fold_01", "fold_02"] {
        for f in ["normalization.lobm", "classifier.lobm"] {
            let a = fs::read(svm.join("models").join(fold).join(f)).unwrap();
            let b = fs::read(replay.join("models").join(fold).join(f)).unwrap();
            assert_eq!(a, b, "{fold}/{f}");
        }
    }
}

#[test]
fn bench_reports_every_classifier() {
    let o = lobcast(&["bench", "--representations", "ae,last", "--runs", "200", "--json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let text = v.to_string();
    for c in ["svm", "slfn", "mlp"] {
        assert!(text.contains(c));
    }
}
