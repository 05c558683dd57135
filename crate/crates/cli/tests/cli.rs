use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn dialogwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dialogwalk"))
        .args(args)
        .env_remove("MP2D_API_KEY")
        .env_remove("MP2D_BASE_URL")
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn dialogwalk")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

fn generate_fixture(concurrency: &str, out: &std::path::Path) -> Output {
    dialogwalk(&[
        "generate",
        "--graph",
        path(&fixture("graph.jsonl")),
        "--corpus",
        path(&fixture("corpus.jsonl")),
        "--n",
        "5",
        "--seed",
        "42",
        "--concurrency",
        concurrency,
        "--out",
        path(out),
    ])
}

#[test]
fn generate_matches_golden_at_any_concurrency() {
    let dir = TempDir::new().unwrap();
    let golden = fs::read(fixture("golden_stub_seed42_n5.jsonl")).unwrap();
    for c in ["1", "4"] {
        let out = dir.path().join(format!("c{c}.jsonl"));
        let o = generate_fixture(c, &out);
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(fs::read(&out).unwrap(), golden, "concurrency {c}");
    }
}

#[test]
fn generate_to_stdout_keeps_logs_on_stderr() {
    let o = dialogwalk(&[
        "generate",
        "--graph",
        path(&fixture("graph.jsonl")),
        "--corpus",
        path(&fixture("corpus.jsonl")),
        "--n",
        "5",
        "--seed",
        "42",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(o.stdout, fs::read(fixture("golden_stub_seed42_n5.jsonl")).unwrap());
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(
        &cfg,
        format!(
            "# fixture run\ngraph={}\ncorpus={}\nseed=42\nn=2\nconcurrency=2\n",
            fixture("graph.jsonl").display(),
            fixture("corpus.jsonl").display()
        ),
    )
    .unwrap();
    let out = dir.path().join("out.jsonl");
    let o = dialogwalk(&["generate", "--config", path(&cfg), "--n", "5", "--out", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(&out).unwrap(), fs::read(fixture("golden_stub_seed42_n5.jsonl")).unwrap());
}

#[test]
fn zero_dialogues_is_a_config_error() {
    let o = dialogwalk(&[
        "generate",
        "--graph",
        path(&fixture("graph.jsonl")),
        "--corpus",
        path(&fixture("corpus.jsonl")),
        "--n",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("at least 1"), "{}", stderr(&o));
}

#[test]
fn llm_without_api_key_names_the_variable() {
    let o = dialogwalk(&[
        "generate",
        "--graph",
        path(&fixture("graph.jsonl")),
        "--corpus",
        path(&fixture("corpus.jsonl")),
        "--generator",
        "llm",
        "--model",
        "some-model",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("MP2D_API_KEY"), "{}", stderr(&o));
}

#[test]
fn unreadable_inputs_exit_2() {
    let o = dialogwalk(&[
        "generate",
        "--graph",
        "/nonexistent/graph.jsonl",
        "--corpus",
        path(&fixture("corpus.jsonl")),
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = dialogwalk(&["generate", "--graph", path(&fixture("graph.jsonl"))]);
    assert_eq!(o.status.code(), Some(2), "no retrieval source: {}", stderr(&o));

    let o = dialogwalk(&[
        "generate",
        "--graph",
        path(&fixture("graph.jsonl")),
        "--corpus",
        path(&fixture("corpus.jsonl")),
        "--remote-base-url",
        "http://localhost:1/w/api.php",
    ]);
    assert_eq!(o.status.code(), Some(2), "two retrieval sources");
}

#[test]
fn mostly_missing_passages_is_degraded() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("tiny.jsonl");
    fs::write(&corpus, "{\"entity\":\"Paris\",\"text\":\"Paris is a city. It is in France.\"}\n").unwrap();
    let out = dir.path().join("out.jsonl");
    let o = dialogwalk(&[
        "generate",
        "--graph",
        path(&fixture("graph.jsonl")),
        "--corpus",
        path(&corpus),
        "--n",
        "3",
        "--out",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("degraded"), "{}", stderr(&o));
}

#[test]
fn stats_on_fixture() {
    let o = dialogwalk(&["stats", path(&fixture("stats_dialogues.jsonl"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["dialogues"], 3);
    assert_eq!(v["turns"], 9);
    assert_eq!(v["avg_topics"], 2.0);
    assert_eq!(v["avg_tokens_per_turn"].as_f64().unwrap(), 65.0 / 9.0);
    assert_eq!(v["unique_tokens"], 32);
}

#[test]
fn stats_on_empty_file_fails() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let o = dialogwalk(&["stats", path(&empty)]);
    assert_eq!(o.status.code(), Some(2));
}

/// Writes predictions derived from the golden dialogues.
fn predictions(dir: &TempDir, f: impl Fn(&Value) -> Value) -> PathBuf {
    let gold = fs::read_to_string(fixture("golden_stub_seed42_n5.jsonl")).unwrap();
    let lines: Vec<String> = gold
        .lines()
        .map(|l| f(&serde_json::from_str(l).unwrap()).to_string())
        .collect();
    let p = dir.path().join("pred.jsonl");
    fs::write(&p, lines.join("\n")).unwrap();
    p
}

#[test]
fn eval_seg_perfect_and_macro() {
    let dir = TempDir::new().unwrap();
    let pred = predictions(&dir, |d| serde_json::json!({"id": d["id"], "pred_labels": d["segment_labels"]}));
    let gold = fixture("golden_stub_seed42_n5.jsonl");
    for extra in [None, Some("--macro")] {
        let mut args = vec!["eval-seg", "--gold", path(&gold), "--pred", path(&pred)];
        args.extend(extra);
        let o = dialogwalk(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        for k in ["precision", "recall", "f1", "exact_match"] {
            assert_eq!(v[k], 1.0, "{k}");
        }
        assert_eq!(v["averaging"], if extra.is_some() { "macro" } else { "micro" });
    }
}

#[test]
fn eval_detect_to_file() {
    let dir = TempDir::new().unwrap();
    let pred = predictions(&dir, |d| {
        let shifts: Vec<bool> = d["turns"].as_array().unwrap().iter().map(|t| t["is_topic_shift"] == true).collect();
        serde_json::json!({"id": d["id"], "pred_shifts": shifts})
    });
    let report = dir.path().join("report.json");
    let o = dialogwalk(&[
        "eval-detect",
        "--gold",
        path(&fixture("golden_stub_seed42_n5.jsonl")),
        "--pred",
        path(&pred),
        "--out",
        path(&report),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["turn_accuracy"], 1.0);
    assert_eq!(v["f1"], 1.0);
    assert_eq!(v["instances"], 5);
}

#[test]
fn eval_errors() {
    let dir = TempDir::new().unwrap();
    let gold = fixture("golden_stub_seed42_n5.jsonl");

    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "\n").unwrap();
    let o = dialogwalk(&["eval-seg", "--gold", path(&gold), "--pred", path(&empty)]);
    assert_eq!(o.status.code(), Some(2));

    let partial = dir.path().join("partial.jsonl");
    let first = fs::read_to_string(&gold).unwrap().lines().next().unwrap().to_string();
    let d: Value = serde_json::from_str(&first).unwrap();
    fs::write(
        &partial,
        serde_json::json!({"id": d["id"], "pred_labels": d["segment_labels"]}).to_string(),
    )
    .unwrap();
    let o = dialogwalk(&["eval-seg", "--gold", path(&gold), "--pred", path(&partial)]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("4 dialogue id(s)"), "{msg}");
    assert!(!msg.contains(d["id"].as_str().unwrap()), "{msg}");
}
