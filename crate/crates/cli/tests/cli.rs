use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_riskrag"));
    cmd.args(args);
    for var in [
        "RISKRAG_K",
        "RISKRAG_BACKEND",
        "RISKRAG_PROVIDERS",
        "RISKRAG_THRESHOLD",
        "RISKRAG_OFFLINE",
    ] {
        cmd.env_remove(var);
    }
    cmd.envs(env.iter().copied());
    cmd.output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn build_index(dir: &Path) -> PathBuf {
    let idx = dir.join("idx");
    let out = run(
        &[
            "--offline",
            "index",
            "--cards",
            p(&fixture("cards.jsonl")),
            "--incidents",
            p(&fixture("incidents.jsonl")),
            "--out",
            p(&idx),
        ],
        &[],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    idx
}

fn sha(path: &Path) -> String {
    hex::encode(Sha256::digest(fs::read(path).unwrap()))
}

#[test]
fn stats_prints_the_funnel_as_json() {
    let out = run(&["stats", "--cards", p(&fixture("cards.jsonl"))], &[]);
    assert_eq!(code(&out), 0);
    let stats: Value = serde_json::from_slice(&out.stdout).unwrap();
    // Fixture construction: 15 repositories, one without a card, one card
    // without risk sections, one mirrored card.
    assert_eq!(stats["total_repos"], 15);
    assert_eq!(stats["with_cards"], 14);
    assert_eq!(stats["with_risk_sections"], 13);
    assert_eq!(stats["unique_risk_sections"], 12);
    let frac = stats["duplicate_fraction"].as_f64().unwrap();
    assert!((frac - 1.0 / 13.0).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_with_one() {
    let out = run(&["stats", "--no-such-flag"], &[]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    let out = run(&["frobnicate"], &[]);
    assert_eq!(code(&out), 1);

    assert_eq!(code(&run(&["--help"], &[])), 0);
    assert_eq!(code(&run(&["--version"], &[])), 0);

    // Bad environment value.
    let out = run(
        &["stats", "--cards", p(&fixture("cards.jsonl"))],
        &[("RISKRAG_K", "many")],
    );
    assert_eq!(code(&out), 1);
}

#[test]
fn config_files_refuse_inline_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("riskrag.toml");
    fs::write(&cfg, "api_key = \"sk-123\"\n").unwrap();
    let out = run(
        &["--config", p(&cfg), "stats", "--cards", p(&fixture("cards.jsonl"))],
        &[],
    );
    assert_eq!(code(&out), 1);
}

#[test]
fn missing_or_malformed_data_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["stats", "--cards", p(&dir.path().join("absent.jsonl"))], &[]);
    assert_eq!(code(&out), 3);

    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"id\": \"x\"\n").unwrap();
    let out = run(&["stats", "--cards", p(&bad)], &[]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn unreachable_provider_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let idx = build_index(dir.path());
    // Port 9 (discard) is closed on loopback; every attempt is refused.
    let providers = dir.path().join("providers.toml");
    fs::write(
        &providers,
        "[chat]\nurl = \"http://127.0.0.1:9/v1\"\nmodel = \"unreachable\"\nmax_retries = 1\nbackoff_ms = 1\ntimeout_s = 2\n",
    )
    .unwrap();
    let out = run(
        &[
            "generate",
            "--description-file",
            p(&fixture("novel/ghibli-sd-lora.txt")),
            "--index",
            p(&idx),
            "--providers",
            p(&providers),
        ],
        &[],
    );
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("2 attempt"));
}

#[test]
fn model_id_reports_exclude_the_models_own_card() {
    let dir = tempfile::tempdir().unwrap();
    let idx = build_index(dir.path());
    let out = run(
        &[
            "--offline",
            "generate",
            "--model-id",
            "pixelforge/sd-lite",
            "--index",
            p(&idx),
            "--k",
            "4",
        ],
        &[],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let cards: Vec<&str> = report["provenance"]["retrieved_cards"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(cards.len(), 4);
    assert!(!cards.contains(&"pixelforge/sd-lite"));

    let out = run(
        &[
            "--offline",
            "generate",
            "--model-id",
            "nobody/nothing",
            "--index",
            p(&idx),
        ],
        &[],
    );
    assert_eq!(code(&out), 3);
}

#[test]
fn manifests_record_sources_digests_and_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cards = fixture("cards.jsonl");
    let before = sha(&cards);
    let out_dir = dir.path().join("ingest");
    let manifests: Vec<Value> = (0..2)
        .map(|_| {
            let out = run(
                &["--offline", "ingest", "--cards", p(&cards), "--out", p(&out_dir)],
                &[("RISKRAG_K", "7")],
            );
            assert_eq!(code(&out), 0);
            let mut m: Value =
                serde_json::from_str(&fs::read_to_string(out_dir.join("run-manifest.json")).unwrap()).unwrap();
            for t in ["started_at", "finished_at"] {
                assert!(m[t].as_str().unwrap().ends_with('Z'));
                m[t] = Value::Null;
            }
            m
        })
        .collect();
    assert_eq!(manifests[0], manifests[1]);
    let m = &manifests[0];
    assert_eq!(m["subcommand"], "ingest");
    assert_eq!(m["config"]["k"], 7);
    assert_eq!(m["config_sources"]["k"], "env:RISKRAG_K");
    assert_eq!(m["config_sources"]["offline"], "flag");
    assert_eq!(m["config_sources"]["threshold"], "default");
    assert_eq!(m["inputs"][p(&cards)], before);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 3);
    // Inputs are never modified.
    assert_eq!(sha(&cards), before);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let idx = build_index(dir.path());
    let cfg = dir.path().join("riskrag.toml");
    fs::write(&cfg, "k = 2\noffline = true\n").unwrap();
    let report = dir.path().join("r.json");
    let desc = fixture("novel/nsfw-anime-lora.txt");
    let args = |k: Option<&'static str>| {
        let mut a = vec![
            "--config",
            p(&cfg),
            "generate",
            "--description-file",
            p(&desc),
            "--index",
            p(&idx),
        ];
        a.extend(["--out", p(&report)]);
        if let Some(k) = k {
            a.extend(["--k", k]);
        }
        a.into_iter().map(String::from).collect::<Vec<_>>()
    };
    for (k, expected, source) in [(None, 2, "file"), (Some("3"), 3, "flag")] {
        let a = args(k);
        let out = run(&a.iter().map(String::as_str).collect::<Vec<_>>(), &[]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let r: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
        assert_eq!(r["provenance"]["k"], expected);
        assert!(r["provenance"]["timestamp"].is_null());
        let m: Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("r.json.manifest.json")).unwrap()).unwrap();
        assert_eq!(m["config_sources"]["k"], source);
        assert_eq!(m["providers"]["chat"], "offline-rules-v1");
        assert_eq!(m["prompt_hashes"].as_object().unwrap().len(), 5);
    }
}

#[test]
fn render_reproduces_the_golden_documents() {
    let dir = tempfile::tempdir().unwrap();
    let golden = fixture("golden/ghibli-sd-lora.report.json");
    for ext in ["md", "html"] {
        let out = dir.path().join(format!("r.{ext}"));
        let res = run(
            &["render", "--report", p(&golden), "--format", ext, "--out", p(&out)],
            &[],
        );
        assert_eq!(code(&res), 0);
        let want = fs::read_to_string(fixture(&format!("golden/ghibli-sd-lora.report.{ext}"))).unwrap();
        assert_eq!(fs::read_to_string(&out).unwrap(), want);
    }
    let html = fs::read_to_string(dir.path().join("r.html")).unwrap();
    assert!(!html.contains("<script"));
    assert!(!html.contains("http://") && !html.contains("https://"));
}

#[test]
fn calibrate_reads_the_label_file() {
    let out = run(
        &[
            "--offline",
            "calibrate",
            "--labels",
            p(&fixture("calibration_labels.csv")),
        ],
        &[],
    );
    assert_eq!(code(&out), 0);
    let cal: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cal["n_pairs"], 16);
    let t = cal["best_threshold"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&t));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("labels.csv");
    fs::write(&bad, "text_a,text_b,label\na,b,maybe\n").unwrap();
    assert_eq!(code(&run(&["--offline", "calibrate", "--labels", p(&bad)], &[])), 3);
}

#[test]
fn dense_indices_need_an_embedder() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "index",
            "--cards",
            p(&fixture("cards.jsonl")),
            "--incidents",
            p(&fixture("incidents.jsonl")),
            "--backend",
            "dense",
            "--out",
            p(&dir.path().join("dense")),
        ],
        &[],
    );
    assert_eq!(code(&out), 1);
}
