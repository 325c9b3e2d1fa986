use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SENATOR: &str = r#"{"id": "p01", "text": "The person (born August 22, 1935) is a Canadian lawyer and former Senator.", "span_start": 17, "span_end": 32, "span_text": "August 22, 1935", "semantic_type": "DATETIME", "candidates": ["1935", "date in 1930s", "***"], "majority_level": 2, "all_levels": [2]}"#;

fn genlevel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_genlevel"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("GENLEVEL_THREADS")
        .output()
        .expect("spawn genlevel")
}

fn ok(args: &[&str]) -> String {
    let out = genlevel(args);
    assert!(
        out.status.success(),
        "genlevel {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a small synthetic train/test pair into `dir`.
fn synth_pair(dir: &Path) -> (PathBuf, PathBuf) {
    let train = dir.join("train.jsonl");
    let test = dir.join("test.jsonl");
    ok(&["synth", "--n", "60", "--seed", "1", "--out", s(&train)]);
    ok(&["synth", "--n", "20", "--seed", "2", "--out", s(&test)]);
    (train, test)
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn baseline_generalizes_senator_record() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.jsonl");
    let rows: Vec<String> = (0..5)
        .map(|i| SENATOR.replace("\"p01\"", &format!("\"t{i}\"")))
        .collect();
    fs::write(&train, rows.join("\n") + "\n").unwrap();
    let data = dir.path().join("data.jsonl");
    fs::write(&data, format!("{SENATOR}\n")).unwrap();
    let model = dir.path().join("base");
    ok(&[
        "train-features",
        "--train",
        s(&train),
        "--out",
        s(&model),
        "--features-model",
        "baseline",
    ]);

    let stdout = ok(&["predict", "--model", s(&model), "--data", s(&data)]);
    let row: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(row["predicted_level"], 2);
    assert_eq!(row["candidate"], "date in 1930s");
    assert_eq!(
        row["generalized_text"],
        "The person (born date in 1930s) is a Canadian lawyer and former Senator."
    );
}

#[test]
fn context_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test) = synth_pair(dir.path());
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&[
            "train-context",
            "--train",
            s(&train),
            "--test",
            s(&test),
            "--out",
            s(&out),
            "--epochs",
            "3",
            "--dim",
            "64",
            "--seed",
            "5",
        ]);
        out
    };
    let (a, b) = (run("a"), run("b"));
    let files = listing(&a);
    assert_eq!(files, listing(&b));
    for f in [
        "checkpoint.json",
        "config.toml",
        "confusion.csv",
        "metrics.json",
        "predictions.jsonl",
        "report.txt",
        "training_log.json",
    ] {
        assert!(files.contains(&f.to_string()), "missing {f}");
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn feature_reruns_are_byte_identical_and_evaluate_standalone() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test) = synth_pair(dir.path());
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        ok(&[
            "--threads",
            threads,
            "train-features",
            "--train",
            s(&train),
            "--test",
            s(&test),
            "--out",
            s(&out),
            "--n-trees",
            "5",
            "--folds",
            "3",
            "--seed",
            "4",
        ]);
        out
    };
    let (a, b) = (run("a", "1"), run("b", "3"));
    for f in listing(&a) {
        assert_eq!(
            fs::read(a.join(&f)).unwrap(),
            fs::read(b.join(&f)).unwrap(),
            "{f} differs"
        );
    }

    let eval = dir.path().join("eval");
    ok(&[
        "evaluate",
        "--model",
        s(&a),
        "--test",
        s(&test),
        "--out",
        s(&eval),
    ]);
    assert_eq!(
        fs::read(a.join("metrics.json")).unwrap(),
        fs::read(eval.join("metrics.json")).unwrap()
    );
    let report = fs::read_to_string(eval.join("report.txt")).unwrap();
    assert!(report.contains("Majority Vote"), "{report}");
}

#[test]
fn failures_exit_nonzero_and_leave_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let missing = dir.path().join("missing.jsonl");

    let r = genlevel(&["train-context", "--train", s(&missing), "--out", s(&out)]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("missing.jsonl"));

    let r = genlevel(&["train-context", "--bogus", "--out", s(&out)]);
    assert!(!r.status.success());

    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"id\": \"x\"}\n").unwrap();
    let r = genlevel(&["train-features", "--train", s(&bad), "--out", s(&out)]);
    assert!(!r.status.success());

    assert_eq!(listing(dir.path()), ["bad.jsonl"]);
}

#[test]
fn thread_count_comes_from_flag_or_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (train, _) = synth_pair(dir.path());
    let flag = ok(&["--threads", "2", "stats", "--data", s(&train), "--json"]);
    let env = Command::new(env!("CARGO_BIN_EXE_genlevel"))
        .args(["stats", "--data", s(&train), "--json"])
        .env("GENLEVEL_THREADS", "1")
        .output()
        .unwrap();
    assert!(env.status.success());
    assert_eq!(flag, String::from_utf8(env.stdout).unwrap());

    let r = Command::new(env!("CARGO_BIN_EXE_genlevel"))
        .args(["stats", "--data", s(&train)])
        .env("GENLEVEL_THREADS", "lots")
        .output()
        .unwrap();
    assert!(!r.status.success());
}

#[test]
fn dump_contextual_pads_to_c() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.jsonl");
    fs::write(&data, format!("{SENATOR}\n")).unwrap();
    let stdout = ok(&["dump-contextual", "--data", s(&data), "--c", "5"]);
    let row: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    let sentences = row["generalized_sentences"].as_array().unwrap();
    assert_eq!(sentences.len(), 5);
    assert_eq!(
        sentences[4],
        "The person (born [PAD]) is a Canadian lawyer and former Senator."
    );
}

#[test]
fn config_file_drives_a_run_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test) = synth_pair(dir.path());
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "seed = 3\n[data]\ntrain = {:?}\ntest = {:?}\n[encoder]\ndim = 32\n[context]\nmax_epochs = 2\n",
            s(&train),
            s(&test)
        ),
    )
    .unwrap();
    let out = dir.path().join("ctx");
    ok(&[
        "train-context",
        "--config",
        s(&cfg),
        "--out",
        s(&out),
        "--seed",
        "8",
    ]);
    let saved = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(saved.contains("seed = 8"), "{saved}");
    assert!(saved.contains("dim = 32"), "{saved}");
    assert!(saved.contains("max_epochs = 2"), "{saved}");

    fs::write(&cfg, "sed = 1\n").unwrap();
    let r = genlevel(&["train-context", "--config", s(&cfg), "--out", s(&out)]);
    assert!(!r.status.success());
}
