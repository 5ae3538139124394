use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::info;
use riskrag::corpus::{ingest, load_card_dump, load_incidents, IngestedCorpus};
use riskrag::evaluation::{
    calibrate, prepare_eval_cards, run_grid, select_eval_set, Cardinality, EvalConfig, EvalResult, LabeledPair,
    PairScorer, DEFAULT_SCORER_DIM,
};
use riskrag::generation::{Generator, PromptSet};
use riskrag::providers::{
    ChatProvider, EmbeddingProvider, HashEmbedder, HttpChat, HttpEmbedder, OfflineChat, ProvidersFile,
};
use riskrag::report::{assemble_report, render, Format, Provenance, RiskReport};
use riskrag::retrieval::{retrieve_context, Backend, IndexBundle, KnowledgeBase};
use serde_json::json;

use crate::error::CliError;
use crate::manifest::{digest_inputs, manifest_path, now, write_atomic, RunManifest};
use crate::settings::Settings;

/// Dimension of the offline stand-in for a dense embedding model.
pub const OFFLINE_EMBED_DIM: usize = 512;

/// Shared state of one invocation.
pub struct Run {
    pub subcommand: &'static str,
    pub settings: Settings,
    pub seed: Option<u64>,
    pub started_at: String,
}

/// Providers resolved from settings.
pub struct Providers {
    pub chat: Box<dyn ChatProvider>,
    pub embedder: Option<Arc<dyn EmbeddingProvider>>,
    pub scorer: PairScorer,
}

impl Providers {
    pub fn names(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::from([
            ("chat".to_string(), self.chat.model_name().to_string()),
            ("scorer".to_string(), self.scorer.name()),
        ]);
        if let Some(e) = &self.embedder {
            m.insert("embedding".into(), e.model_name().to_string());
        }
        m
    }

    pub fn embedder(&self) -> Option<&dyn EmbeddingProvider> {
        self.embedder.as_deref()
    }
}

impl Run {
    fn providers_file(&self) -> Result<Option<ProvidersFile>, CliError> {
        match &self.settings.providers {
            Some(p) if !self.settings.offline => Ok(Some(ProvidersFile::load(p)?)),
            _ => Ok(None),
        }
    }

    /// Offline runs use the deterministic rule engine and hash embeddings;
    /// otherwise each role comes from the providers file.
    pub fn providers(&self, need_chat: bool, need_embedder: bool) -> Result<Providers, CliError> {
        let file = self.providers_file()?;
        let Some(file) = file else {
            if !self.settings.offline && need_chat {
                return Err(CliError::Usage(
                    "no chat provider configured: pass --providers <file> or --offline".into(),
                ));
            }
            if !self.settings.offline && need_embedder {
                return Err(CliError::Usage(
                    "the dense backend needs an embedding provider: pass --providers <file> or --offline".into(),
                ));
            }
            return Ok(Providers {
                chat: Box::new(OfflineChat::new()),
                embedder: need_embedder
                    .then(|| Arc::new(HashEmbedder::new(OFFLINE_EMBED_DIM)) as Arc<dyn EmbeddingProvider>),
                scorer: PairScorer::offline(DEFAULT_SCORER_DIM),
            });
        };
        let chat: Box<dyn ChatProvider> = match file.chat {
            Some(cfg) => Box::new(HttpChat::new(cfg)?),
            None if need_chat => return Err(CliError::Usage("providers file has no [chat] section".into())),
            None => Box::new(OfflineChat::new()),
        };
        let embedder = match file.embedding {
            Some(cfg) if need_embedder => Some(Arc::new(HttpEmbedder::new(cfg)?) as Arc<dyn EmbeddingProvider>),
            None if need_embedder => {
                return Err(CliError::Usage("providers file has no [embedding] section".into()));
            }
            _ => None,
        };
        let scorer = match file.scorer {
            Some(cfg) => PairScorer::remote(Arc::new(HttpEmbedder::new(cfg)?)),
            None => PairScorer::offline(DEFAULT_SCORER_DIM),
        };
        Ok(Providers { chat, embedder, scorer })
    }

    fn manifest(&self, inputs: &[&Path], outputs: Vec<String>) -> Result<RunManifest, CliError> {
        let mut inputs = inputs.to_vec();
        if let Some(p) = self.settings.providers.as_deref().filter(|_| !self.settings.offline) {
            inputs.push(p);
        }
        Ok(RunManifest {
            tool: "riskrag".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: self.subcommand.into(),
            config: serde_json::to_value(&self.settings).expect("settings serialize"),
            config_sources: self.settings.sources.clone(),
            inputs: digest_inputs(&inputs)?,
            providers: BTreeMap::new(),
            prompt_hashes: BTreeMap::new(),
            seed: self.seed,
            started_at: self.started_at.clone(),
            finished_at: String::new(),
            outputs,
        })
    }

    fn finish(&self, mut m: RunManifest, path: &Path) -> Result<(), CliError> {
        m.finished_at = now();
        m.write(path)?;
        info!("wrote manifest {}", path.display());
        Ok(())
    }
}

fn read_corpus(cards: &Path) -> Result<IngestedCorpus, CliError> {
    let entries = load_card_dump(cards).map_err(|e| CliError::data(cards.display(), e))?;
    ingest(&entries).map_err(|e| CliError::data(cards.display(), e))
}

fn knowledge_base(cards: &Path, incidents: &Path) -> Result<(IngestedCorpus, KnowledgeBase), CliError> {
    let corpus = read_corpus(cards)?;
    let incidents = load_incidents(incidents).map_err(|e| CliError::data(incidents.display(), e))?;
    let kb = KnowledgeBase {
        cards: corpus.dedup.retained.clone(),
        incidents,
    };
    Ok((corpus, kb))
}

fn json_bytes(value: &impl serde::Serialize) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s.into_bytes()
}

fn stdout_write(text: &str) -> Result<(), CliError> {
    std::io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| CliError::data("stdout", e))
}

pub fn ingest_cmd(run: &Run, cards: &Path, out: &Path) -> Result<(), CliError> {
    let corpus = read_corpus(cards)?;
    let mut records = String::new();
    for r in &corpus.dedup.retained {
        records.push_str(&serde_json::to_string(r).expect("record serializes"));
        records.push('\n');
    }
    let files = [
        ("corpus.jsonl", records.into_bytes()),
        ("stats.json", json_bytes(&corpus.stats)),
        (
            "clusters.json",
            json_bytes(&json!({
                "dropped_count": corpus.dedup.dropped_count,
                "clusters": corpus.dedup.clusters,
            })),
        ),
    ];
    let mut outputs = Vec::new();
    for (name, bytes) in files {
        let p = out.join(name);
        write_atomic(&p, &bytes)?;
        outputs.push(p.display().to_string());
    }
    info!(
        "{} cards with unique risk sections ({} duplicates dropped)",
        corpus.dedup.retained.len(),
        corpus.dedup.dropped_count
    );
    let m = run.manifest(&[cards], outputs)?;
    run.finish(m, &manifest_path(out, true))
}

pub fn stats_cmd(run: &Run, cards: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let corpus = read_corpus(cards)?;
    let bytes = json_bytes(&corpus.stats);
    match out {
        None => stdout_write(std::str::from_utf8(&bytes).expect("json is utf-8")),
        Some(p) => {
            write_atomic(p, &bytes)?;
            let m = run.manifest(&[cards], vec![p.display().to_string()])?;
            run.finish(m, &manifest_path(p, false))
        }
    }
}

pub fn index_cmd(run: &Run, cards: &Path, incidents: &Path, out: &Path) -> Result<(), CliError> {
    let (_, kb) = knowledge_base(cards, incidents)?;
    let backend = run.settings.backend;
    let providers = run.providers(false, backend == Backend::Dense)?;
    let bundle = IndexBundle::build(backend, &kb, providers.embedder())?;
    let written = bundle.save(&kb, out)?;
    info!(
        "{backend} index over {} cards and {} incidents",
        kb.cards.len(),
        kb.incidents.len()
    );
    let mut m = run.manifest(
        &[cards, incidents],
        written.iter().map(|p| p.display().to_string()).collect(),
    )?;
    if let Some(e) = &providers.embedder {
        m.providers.insert("embedding".into(), e.model_name().to_string());
    }
    run.finish(m, &manifest_path(out, true))
}

pub enum Subject<'a> {
    ModelId(&'a str),
    DescriptionFile(&'a Path),
}

pub struct GenerateArgs<'a> {
    pub subject: Subject<'a>,
    pub index: &'a Path,
    pub backend_flag: Option<Backend>,
    pub format: Format,
    pub out: Option<&'a Path>,
    pub prompts: Option<&'a Path>,
}

fn load_prompts(dir: Option<&Path>) -> Result<PromptSet, CliError> {
    match dir {
        None => Ok(PromptSet::builtin()),
        Some(d) => PromptSet::load_dir(d).map_err(CliError::Usage),
    }
}

pub fn generate_cmd(run: &Run, args: GenerateArgs<'_>) -> Result<(), CliError> {
    let (bundle, kb) = IndexBundle::load(args.index)?;
    if let Some(b) = args.backend_flag {
        if b != bundle.backend() {
            return Err(CliError::Usage(format!(
                "--backend {b} does not match the {} index in {}",
                bundle.backend(),
                args.index.display()
            )));
        }
    }
    let mut inputs: Vec<&Path> = vec![args.index];
    let (model_id, description, exclude) = match args.subject {
        Subject::ModelId(id) => {
            let card = kb
                .card(id)
                .ok_or_else(|| CliError::Data(format!("model `{id}` is not in the indexed corpus")))?;
            (id.to_string(), card.description.clone(), Some(id.to_string()))
        }
        Subject::DescriptionFile(path) => {
            inputs.push(path);
            let text = fs::read_to_string(path).map_err(|e| CliError::data(path.display(), e))?;
            let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("model").to_string();
            (id, text.trim().to_string(), None)
        }
    };
    if description.is_empty() {
        return Err(CliError::Data("model description is empty".into()));
    }
    let prompts = load_prompts(args.prompts)?;
    let providers = run.providers(true, bundle.backend() == Backend::Dense)?;
    let k = run.settings.k;
    let ctx = retrieve_context(&bundle, &kb, &description, k, exclude.as_deref(), providers.embedder())?;
    let generator = Generator {
        chat: providers.chat.as_ref(),
        scorer: &providers.scorer,
        prompts: &prompts,
        config: run.settings.generator.clone(),
    };
    let out = generator.generate(&ctx, &description)?;
    let provenance = Provenance {
        backend: bundle.backend(),
        k,
        chat_model: providers.chat.model_name().to_string(),
        embedding_model: bundle.embedding_model().map(str::to_string),
        scorer: providers.scorer.name(),
        prompt_hashes: prompts.hashes(),
        retrieved_cards: ctx.card_hits.iter().map(|h| h.id.clone()).collect(),
        retrieved_incidents: ctx.incident_hits.iter().map(|h| h.id).collect(),
        timestamp: (!run.settings.offline).then(now),
    };
    let report = assemble_report(
        &model_id,
        &description,
        out.uses,
        out.mapped,
        out.mitigations,
        provenance,
    )?;
    report.validate()?;
    let doc = render(&report, args.format);
    info!(
        "{} risks ({} from incidents), {} mitigations, {} uses",
        report.risks.len(),
        report.risks.iter().filter(|r| r.from_incident).count(),
        report.mitigations.len(),
        report.uses.len()
    );
    match args.out {
        None => stdout_write(&doc),
        Some(path) => {
            write_atomic(path, doc.as_bytes())?;
            let mut m = run.manifest(&inputs, vec![path.display().to_string()])?;
            m.providers = providers.names();
            m.prompt_hashes = prompts.hashes();
            run.finish(m, &manifest_path(path, false))
        }
    }
}

pub fn render_cmd(run: &Run, report_path: &Path, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    let text = fs::read_to_string(report_path).map_err(|e| CliError::data(report_path.display(), e))?;
    let report: RiskReport = serde_json::from_str(&text).map_err(|e| CliError::data(report_path.display(), e))?;
    report.validate()?;
    let doc = render(&report, format);
    match out {
        None => stdout_write(&doc),
        Some(path) => {
            write_atomic(path, doc.as_bytes())?;
            let m = run.manifest(&[report_path], vec![path.display().to_string()])?;
            run.finish(m, &manifest_path(path, false))
        }
    }
}

pub struct EvaluateArgs<'a> {
    pub cards: &'a Path,
    pub incidents: &'a Path,
    pub backends: Vec<Backend>,
    pub ks: Vec<usize>,
    pub top_fraction: f64,
    pub cardinality: Cardinality,
    pub out: &'a Path,
    pub prompts: Option<&'a Path>,
}

/// `backend,k,card_id,precision,recall,corpus_score` rows.
pub fn results_csv(result: &EvalResult) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["backend", "k", "card_id", "precision", "recall", "corpus_score"])
        .map_err(|e| CliError::data("csv", e))?;
    for c in &result.cards {
        w.write_record([
            c.backend.to_string(),
            c.k.to_string(),
            c.card_id.clone(),
            c.precision.to_string(),
            c.recall.to_string(),
            c.corpus_score.to_string(),
        ])
        .map_err(|e| CliError::data("csv", e))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::data("csv", e))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

pub fn evaluate_cmd(run: &Run, args: EvaluateArgs<'_>) -> Result<(), CliError> {
    let (corpus, kb) = knowledge_base(args.cards, args.incidents)?;
    let need_dense = args.backends.contains(&Backend::Dense);
    let providers = run.providers(true, need_dense)?;
    let prompts = load_prompts(args.prompts)?;
    let generator = Generator {
        chat: providers.chat.as_ref(),
        scorer: &providers.scorer,
        prompts: &prompts,
        config: run.settings.generator.clone(),
    };
    let bundles = args
        .backends
        .iter()
        .map(|&b| IndexBundle::build(b, &kb, providers.embedder()))
        .collect::<Result<Vec<_>, _>>()?;
    let selected = select_eval_set(&corpus.dedup, args.top_fraction)?;
    let eval_cards = prepare_eval_cards(&generator, &selected)?;
    info!(
        "evaluation set: {} of {} cards selected, {} with extractable risks",
        selected.len(),
        corpus.dedup.retained.len(),
        eval_cards.len()
    );
    let configs: Vec<EvalConfig> = args
        .backends
        .iter()
        .flat_map(|&backend| {
            args.ks.iter().map(move |&k| EvalConfig {
                backend,
                k,
                threshold: run.settings.threshold,
                cardinality: args.cardinality,
            })
        })
        .collect();
    let result = run_grid(&generator, &bundles, &kb, &eval_cards, &configs, providers.embedder())?;

    let summary = json!({
        "scorer": result.scorer,
        "threshold": run.settings.threshold,
        "cardinality": args.cardinality,
        "top_fraction": args.top_fraction,
        "selected_cards": selected.iter().map(|c| &c.id).collect::<Vec<_>>(),
        "evaluated_cards": eval_cards.iter().map(|c| &c.id).collect::<Vec<_>>(),
        "aggregates": result.aggregates,
    });
    let files: [(&str, Vec<u8>); 5] = [
        ("results.csv", results_csv(&result)?.into_bytes()),
        ("results.json", json_bytes(&summary)),
        ("results.md", result.markdown_table().into_bytes()),
        ("matches.json", json_bytes(&result.cards)),
        ("ground_truth.json", json_bytes(&eval_cards)),
    ];
    let mut outputs = Vec::new();
    for (name, bytes) in files {
        let p = args.out.join(name);
        write_atomic(&p, &bytes)?;
        outputs.push(p.display().to_string());
    }
    print!("{}", result.markdown_table());
    let mut m = run.manifest(&[args.cards, args.incidents], outputs)?;
    m.providers = providers.names();
    m.prompt_hashes = prompts.hashes();
    run.finish(m, &manifest_path(args.out, true))
}

pub fn read_labels(path: &Path) -> Result<Vec<LabeledPair>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::data(path.display(), e))?;
    let mut pairs = Vec::new();
    for (i, row) in reader.deserialize::<BTreeMap<String, String>>().enumerate() {
        let row = row.map_err(|e| CliError::data(path.display(), e))?;
        let field = |k: &str| {
            row.get(k)
                .cloned()
                .ok_or_else(|| CliError::Data(format!("{}: row {} lacks `{k}`", path.display(), i + 1)))
        };
        let is_match = match field("label")?.trim() {
            "match" => true,
            "no_match" => false,
            other => {
                return Err(CliError::Data(format!(
                    "{}: row {}: label `{other}` is neither match nor no_match",
                    path.display(),
                    i + 1
                )))
            }
        };
        pairs.push(LabeledPair {
            text_a: field("text_a")?,
            text_b: field("text_b")?,
            is_match,
        });
    }
    Ok(pairs)
}

pub fn calibrate_cmd(run: &Run, labels: &Path, out: Option<&PathBuf>) -> Result<(), CliError> {
    let pairs = read_labels(labels)?;
    let providers = run.providers(false, false)?;
    let cal = calibrate(&pairs, &providers.scorer)?;
    let bytes = json_bytes(&cal);
    eprintln!(
        "best threshold {:.2} agrees with {:.1}% of {} labelled pairs",
        cal.best_threshold,
        100.0 * cal.best_agreement,
        cal.n_pairs
    );
    match out {
        None => stdout_write(std::str::from_utf8(&bytes).expect("json is utf-8")),
        Some(p) => {
            write_atomic(p, &bytes)?;
            let mut m = run.manifest(&[labels], vec![p.display().to_string()])?;
            m.providers = providers.names();
            run.finish(m, &manifest_path(p, false))
        }
    }
}
