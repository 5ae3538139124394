use std::path::PathBuf;

use riskrag::corpus::{ingest, load_card_dump, load_incidents, parse_card_dump, CorpusError};
use riskrag::evaluation::{calibrate, LabeledPair, PairScorer, DEFAULT_SCORER_DIM};
use riskrag::providers::{HashEmbedder, ProvidersFile};
use riskrag::report::{render, validate_json, Format, RiskReport};
use riskrag::retrieval::{Backend, IndexBundle, KnowledgeBase};
use riskrag::{SparseIndexF32, SparseIndexF64};

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(rel)
}

fn knowledge_base() -> KnowledgeBase {
    let corpus = ingest(&load_card_dump(fixture("cards.jsonl")).unwrap()).unwrap();
    KnowledgeBase {
        cards: corpus.dedup.retained,
        incidents: load_incidents(fixture("incidents.jsonl")).unwrap(),
    }
}

#[test]
fn fixture_funnel_counts() {
    let text = std::fs::read_to_string(fixture("cards.jsonl")).unwrap();
    let raw: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let corpus = ingest(&load_card_dump(fixture("cards.jsonl")).unwrap()).unwrap();

    assert_eq!(corpus.stats.total_repos, raw.len() as u64);
    let with_markdown = raw.iter().filter(|v| v["card_markdown"].is_string()).count();
    assert_eq!(corpus.stats.with_cards, with_markdown as u64);
    // One card has no risk heading, one is an exact mirror of another.
    assert_eq!(corpus.stats.with_risk_sections, corpus.stats.with_cards - 1);
    assert_eq!(corpus.stats.unique_risk_sections, corpus.stats.with_risk_sections - 1);
    let mirror = corpus.dedup.clusters.values().find(|m| m.len() == 2).unwrap();
    assert!(mirror.contains(&"openlm/gpt2-small-en".to_string()));
    assert!(corpus.dedup.get("openlm/gpt2-small-en").is_some());
}

#[test]
fn malformed_dump_lines_name_the_line() {
    let err = parse_card_dump("{\"id\": \"a\", \"downloads\": 1}\nnot json\n".as_bytes()).unwrap_err();
    assert!(matches!(err, CorpusError::Parse { line: 2, .. }), "{err:?}");
}

#[test]
fn index_bundles_survive_a_save_load_round_trip() {
    let kb = knowledge_base();
    let embedder = HashEmbedder::new(64);
    let dir = tempfile::tempdir().unwrap();
    for backend in [Backend::Tfidf, Backend::Dense] {
        let bundle = IndexBundle::build(backend, &kb, Some(&embedder)).unwrap();
        let out = dir.path().join(backend.as_str());
        bundle.save(&kb, &out).unwrap();
        let (loaded, kb2) = IndexBundle::load(&out).unwrap();
        assert_eq!(kb2, kb);
        let q = "image generator that copies artist styles";
        let before = bundle.cards.top_k(q, 3, None, Some(&embedder)).unwrap();
        let after = loaded.cards.top_k(q, 3, None, Some(&embedder)).unwrap();
        assert_eq!(before, after);
    }
}

#[test]
fn single_and_double_precision_indices_agree_on_ranking() {
    let kb = knowledge_base();
    let docs: Vec<(String, String)> = kb.cards.iter().map(|c| (c.id.clone(), c.description.clone())).collect();
    let wide = SparseIndexF64::build(&docs).unwrap();
    let narrow = SparseIndexF32::build(&docs).unwrap();
    for q in [
        "sentiment classifier for reviews",
        "speech recognition",
        "text to image anime",
    ] {
        let a = wide.top_k(q, 5, None).unwrap();
        let b = narrow.top_k(q, 5, None).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.score - f64::from(y.score)).abs() < 1e-5);
        }
        assert_eq!(
            a.iter().map(|h| &h.id).collect::<Vec<_>>(),
            b.iter().map(|h| &h.id).collect::<Vec<_>>()
        );
    }
}

#[test]
fn golden_report_is_schema_valid_and_renders_identically() {
    let json = std::fs::read_to_string(fixture("golden/ghibli-sd-lora.report.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    validate_json(&value).unwrap();
    let report: RiskReport = serde_json::from_value(value).unwrap();
    report.validate().unwrap();
    assert_eq!(render(&report, Format::Json), json);
    let md = std::fs::read_to_string(fixture("golden/ghibli-sd-lora.report.md")).unwrap();
    assert_eq!(render(&report, Format::Markdown), md);
}

#[test]
fn example_providers_file_holds_variable_names_only() {
    let text = std::fs::read_to_string(fixture("providers.example.toml")).unwrap();
    let file = ProvidersFile::from_toml(&text).unwrap();
    let chat = file.chat.unwrap();
    assert_eq!(chat.api_key_env.as_deref(), Some("OPENAI_API_KEY"));
    assert!(file.embedding.is_some());
    assert!(ProvidersFile::from_toml("[chat]\nurl = \"u\"\nmodel = \"m\"\napi_key = \"sk-live\"\n").is_err());
}

#[test]
fn fixture_labels_calibrate_inside_the_sweep() {
    let mut reader = csv::Reader::from_path(fixture("calibration_labels.csv")).unwrap();
    let pairs: Vec<LabeledPair> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            LabeledPair {
                text_a: r[0].to_string(),
                text_b: r[1].to_string(),
                is_match: &r[2] == "match",
            }
        })
        .collect();
    let cal = calibrate(&pairs, &PairScorer::offline(DEFAULT_SCORER_DIM)).unwrap();
    assert_eq!(cal.n_pairs, 16);
    assert_eq!(cal.sweep.len(), 101);
    assert!(cal.best_agreement >= 0.9);
    // The reported best is the maximum of the sweep.
    let max = cal.sweep.iter().map(|p| p.agreement).fold(0.0, f64::max);
    assert_eq!(cal.best_agreement, max);
}
