mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fqn_probe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fqn-probe"))
        .args(args)
        .env_remove("FQN_PROBE_API_KEY")
        .output()
        .expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn oracle_pipeline_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = common::fixture("desk_corpus.jsonl");
    let out = dir.path().join("run");

    let hits = dir.path().join("hits.jsonl");
    let r = fqn_probe(&["scan", "--corpus", arg(&corpus), "--out", arg(&hits)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(fs::read_to_string(&hits).unwrap().lines().count(), 20);

    let r = fqn_probe(&[
        "compose",
        "--corpus",
        arg(&corpus),
        "--out",
        arg(&out),
        "--preset",
        "basic,best",
        "--shots",
        "all",
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let manifest = fs::read_to_string(out.join("tasks/manifest.jsonl")).unwrap();
    assert_eq!(manifest.lines().count(), 2 * 5 * 248);

    let r = fqn_probe(&[
        "run",
        "--out",
        arg(&out),
        "--backend",
        "oracle",
        "--concurrency",
        "3",
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(String::from_utf8_lossy(&r.stderr).contains("2480/2480"));

    let r = fqn_probe(&["eval", "--corpus", arg(&corpus), "--out", arg(&out)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let md = fs::read_to_string(out.join("report/report.md")).unwrap();
    assert!(md.contains("100.00"));
    assert!(out.join("report/report.csv").exists());

    let rerendered = dir.path().join("again");
    let r = fqn_probe(&[
        "report",
        "--input",
        arg(&out.join("report/report.csv")),
        "--out",
        arg(&rerendered),
    ]);
    assert!(r.status.success());
    assert_eq!(
        fs::read_to_string(rerendered.join("report.md")).unwrap(),
        md
    );
}

#[test]
fn existing_outputs_need_force() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = common::fixture("desk_corpus.jsonl");
    let out = dir.path().join("run");
    let compose = |force: bool| {
        let mut args = vec![
            "compose",
            "--corpus",
            arg(&corpus),
            "--out",
            arg(&out),
            "--shots",
            "zero",
        ];
        if force {
            args.push("--force");
        }
        fqn_probe(&args)
    };
    assert!(compose(false).status.success());
    let again = compose(false);
    assert_eq!(again.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));
    assert!(compose(true).status.success());
}

#[test]
fn config_file_drives_a_stochastic_run() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(
        common::fixture("desk_corpus.jsonl"),
        dir.path().join("desk.jsonl"),
    )
    .unwrap();
    let config = dir.path().join("run.json");
    fs::write(
        &config,
        r#"{
  "corpus_path": "desk.jsonl",
  "out_dir": "out",
  "prompts": ["best", {"preset": "basic", "template": "symbol"}],
  "shots": ["zero", "few-loo"],
  "backend": {"kind": "stochastic"},
  "seed": 4
}"#,
    )
    .unwrap();
    for cmd in ["compose", "run", "eval"] {
        let r = fqn_probe(&["--config", arg(&config), cmd]);
        assert!(
            r.status.success(),
            "{cmd}: {}",
            String::from_utf8_lossy(&r.stderr)
        );
    }
    let predictions = fs::read_to_string(dir.path().join("out/predictions.jsonl")).unwrap();
    assert_eq!(predictions.lines().count(), 2 * 2 * 248);
    let first = predictions.clone();

    let r = fqn_probe(&["--config", arg(&config), "--force", "run"]);
    assert!(r.status.success());
    assert_eq!(
        fs::read_to_string(dir.path().join("out/predictions.jsonl")).unwrap(),
        first
    );
}

#[test]
fn bad_invocations_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = common::fixture("desk_corpus.jsonl");
    let out = dir.path().join("run");
    assert!(fqn_probe(&[
        "compose",
        "--corpus",
        arg(&corpus),
        "--out",
        arg(&out),
        "--shots",
        "one"
    ])
    .status
    .success());

    let r = fqn_probe(&["run", "--out", arg(&out), "--backend", "http"]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("FQN_PROBE_API_KEY"));

    assert_eq!(
        fqn_probe(&["run", "--out", arg(&out), "--backend", "nope"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        fqn_probe(&[
            "compose",
            "--corpus",
            arg(&corpus),
            "--out",
            arg(&out),
            "--preset",
            "fancy",
            "--force"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        fqn_probe(&[
            "scan",
            "--corpus",
            "/no/such/file.jsonl",
            "--out",
            arg(&out.join("h.jsonl"))
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(fqn_probe(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn sample_writes_corpus_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = common::fixture("desk_corpus.jsonl");
    let out = dir.path().join("sample.jsonl");
    let r = fqn_probe(&[
        "--seed",
        "3",
        "sample",
        "--corpus",
        arg(&corpus),
        "--out",
        arg(&out),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let sampled = fqn_probe::Corpus::load(&out).unwrap();
    assert!(!sampled.is_empty());
    let log = fs::read_to_string(out.with_extension("log.jsonl")).unwrap();
    assert!(log.lines().count() >= sampled.len());
}
