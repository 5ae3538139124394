//! Offline evaluation of retrieval quality against pseudo ground truth.
//!
//! The ground truth `G` of a card is what the Step-1 extractor finds in the
//! card's own risk sections; the retrieved set `R` is what the same
//! extractor finds in the sections and incidents retrieved for the card's
//! description, with the card itself excluded. The two sets are compared by
//! threshold matching under a token-level similarity.

pub mod matching;
pub mod similarity;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use matching::{check_threshold, greedy_match, match_and_score, Cardinality, Match, MatchOutcome, MatchResult};
pub use similarity::{token_windows, PairScorer, DEFAULT_SCORER_DIM};

use crate::corpus::{DedupResult, ModelCardRecord, Section};
use crate::generation::{merge_duplicate_risks, risk_sources, GenerationError, Generator, Source};
use crate::providers::{EmbeddingProvider, ProviderError};
use crate::retrieval::{retrieve_context, Backend, IndexBundle, KnowledgeBase, RetrievalError};

/// Threshold used when none is given.
pub const DEFAULT_THRESHOLD: f64 = 0.6;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("text has no tokens to score: {0:?}")]
    DegenerateText(String),
    #[error("match threshold must be finite and non-negative, got {0}")]
    InvalidThreshold(f64),
    #[error("top fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("no index was built for backend {0}")]
    MissingBackend(Backend),
    #[error("card `{card}` retrieved itself during evaluation")]
    Leakage { card: String },
    #[error("evaluation set is empty")]
    EmptyEvalSet,
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Generation(Box<GenerationError>),
}

impl From<GenerationError> for EvalError {
    fn from(e: GenerationError) -> Self {
        match e {
            GenerationError::Scorer(inner) => inner,
            GenerationError::Provider(p) => EvalError::Provider(p),
            other => EvalError::Generation(Box::new(other)),
        }
    }
}

/// The `floor(fraction · N)` most-downloaded cards (at least one), ties
/// broken by id. Ten percent of 2672 cards is 267 cards.
pub fn select_eval_set(corpus: &DedupResult, top_fraction: f64) -> Result<Vec<ModelCardRecord>, EvalError> {
    if !(top_fraction > 0.0 && top_fraction <= 1.0) {
        return Err(EvalError::InvalidFraction(top_fraction));
    }
    let mut cards = corpus.retained.clone();
    cards.sort_by(|a, b| b.downloads.cmp(&a.downloads).then_with(|| a.id.cmp(&b.id)));
    // The epsilon absorbs products like 0.29 * 100 = 28.999999999999996.
    let n = ((top_fraction * cards.len() as f64 + 1e-9).floor() as usize).max(1);
    cards.truncate(n);
    Ok(cards)
}

/// A card of the evaluation set with its pseudo ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCard {
    pub id: String,
    pub description: String,
    pub ground_truth: Vec<String>,
}

fn section_jobs(card: &ModelCardRecord, sections: &[Section]) -> Vec<(String, Source)> {
    sections
        .iter()
        .map(|s| (s.text.clone(), Source::card(&card.id, &s.kinds)))
        .collect()
}

/// Step-1 extraction over the card's own risk sections, merged like the
/// retrieved side so both sets are compared at the same granularity.
pub fn build_pseudo_ground_truth(generator: &Generator<'_>, card: &ModelCardRecord) -> Result<Vec<String>, EvalError> {
    let mut items = Vec::new();
    for (text, source) in section_jobs(card, &card.risk_sections) {
        items.extend(generator.extract_risk_items(&text, &source, &card.description)?);
    }
    let merged = merge_duplicate_risks(&items, generator.config.merge_threshold, generator.scorer)?;
    Ok(merged.into_iter().map(|r| r.text).collect())
}

/// Ground truth for every card, dropping cards whose sections yield nothing.
pub fn prepare_eval_cards(generator: &Generator<'_>, cards: &[ModelCardRecord]) -> Result<Vec<EvalCard>, EvalError> {
    let built: Vec<Option<EvalCard>> = cards
        .par_iter()
        .map(|card| {
            let g = build_pseudo_ground_truth(generator, card)?;
            Ok((!g.is_empty()).then(|| EvalCard {
                id: card.id.clone(),
                description: card.description.clone(),
                ground_truth: g,
            }))
        })
        .collect::<Result<_, EvalError>>()?;
    Ok(built.into_iter().flatten().collect())
}

/// One cell of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub backend: Backend,
    pub k: usize,
    pub threshold: f64,
    #[serde(default)]
    pub cardinality: Cardinality,
}

/// Result for one card under one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardResult {
    pub backend: Backend,
    pub k: usize,
    pub card_id: String,
    pub precision: f64,
    pub recall: f64,
    pub corpus_score: f64,
    pub matching: MatchResult,
}

/// Means over cards for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub config: EvalConfig,
    pub n_cards: usize,
    pub precision: f64,
    pub recall: f64,
    pub corpus_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub scorer: String,
    pub aggregates: Vec<Aggregate>,
    pub cards: Vec<CardResult>,
}

/// Step 1 over the self-excluded retrieval for `card`, merged.
pub fn retrieved_risks(
    generator: &Generator<'_>,
    bundle: &IndexBundle,
    kb: &KnowledgeBase,
    card: &EvalCard,
    k: usize,
    embedder: Option<&dyn EmbeddingProvider>,
) -> Result<Vec<String>, EvalError> {
    let ctx = retrieve_context(bundle, kb, &card.description, k, Some(&card.id), embedder)?;
    if ctx.card_hits.iter().any(|h| h.id == card.id) {
        return Err(EvalError::Leakage { card: card.id.clone() });
    }
    let items = generator.extract_all_risks(&risk_sources(&ctx), &card.description)?;
    let merged = merge_duplicate_risks(&items, generator.config.merge_threshold, generator.scorer)?;
    Ok(merged.into_iter().map(|r| r.text).collect())
}

fn mean(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let (n, sum) = values.fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    (n, if n == 0 { 0.0 } else { sum / n as f64 })
}

/// Evaluate every configuration over every card. `bundles` holds one index
/// bundle per backend that appears in `configs`.
pub fn run_grid(
    generator: &Generator<'_>,
    bundles: &[IndexBundle],
    kb: &KnowledgeBase,
    cards: &[EvalCard],
    configs: &[EvalConfig],
    embedder: Option<&dyn EmbeddingProvider>,
) -> Result<EvalResult, EvalError> {
    if cards.is_empty() {
        return Err(EvalError::EmptyEvalSet);
    }
    let mut aggregates = Vec::with_capacity(configs.len());
    let mut all = Vec::new();
    for config in configs {
        check_threshold(config.threshold)?;
        if config.k == 0 {
            return Err(RetrievalError::InvalidK.into());
        }
        let bundle = bundles
            .iter()
            .find(|b| b.backend() == config.backend)
            .ok_or(EvalError::MissingBackend(config.backend))?;
        let rows: Vec<CardResult> = cards
            .par_iter()
            .map(|card| {
                let r = retrieved_risks(generator, bundle, kb, card, config.k, embedder)?;
                let m = match_and_score(
                    &r,
                    &card.ground_truth,
                    config.threshold,
                    generator.scorer,
                    config.cardinality,
                )?;
                Ok(CardResult {
                    backend: config.backend,
                    k: config.k,
                    card_id: card.id.clone(),
                    precision: m.precision,
                    recall: m.recall,
                    corpus_score: m.corpus_score,
                    matching: m,
                })
            })
            .collect::<Result<_, EvalError>>()?;
        let (n_cards, precision) = mean(rows.iter().map(|r| r.precision));
        aggregates.push(Aggregate {
            config: config.clone(),
            n_cards,
            precision,
            recall: mean(rows.iter().map(|r| r.recall)).1,
            corpus_score: mean(rows.iter().map(|r| r.corpus_score)).1,
        });
        all.extend(rows);
    }
    Ok(EvalResult {
        scorer: generator.scorer.name(),
        aggregates,
        cards: all,
    })
}

impl EvalResult {
    /// Backends as rows, `k` as column groups of precision / recall / score.
    pub fn markdown_table(&self) -> String {
        let mut ks: Vec<usize> = self.aggregates.iter().map(|a| a.config.k).collect();
        ks.sort_unstable();
        ks.dedup();
        let mut backends: Vec<Backend> = Vec::new();
        for a in &self.aggregates {
            if !backends.contains(&a.config.backend) {
                backends.push(a.config.backend);
            }
        }
        let mut out = String::from("| Retriever |");
        for k in &ks {
            let _ = write!(out, " P@{k} | R@{k} | S@{k} |");
        }
        out.push_str("\n|---|");
        out.push_str(&"---:|".repeat(3 * ks.len()));
        out.push('\n');
        for b in backends {
            let _ = write!(out, "| {b} |");
            for k in &ks {
                match self
                    .aggregates
                    .iter()
                    .find(|a| a.config.backend == b && a.config.k == *k)
                {
                    Some(a) => {
                        let _ = write!(out, " {:.4} | {:.4} | {:.4} |", a.precision, a.recall, a.corpus_score);
                    }
                    None => out.push_str(" – | – | – |"),
                }
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "\nP = precision, R = recall, S = mean best-match similarity over ground truth; scorer `{}`.",
            self.scorer
        );
        out
    }
}

/// A human judgement on one pair of risk texts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub text_a: String,
    pub text_b: String,
    pub is_match: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub agreement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub scorer: String,
    pub n_pairs: usize,
    pub best_threshold: f64,
    pub best_agreement: f64,
    pub sweep: Vec<SweepPoint>,
}

/// Sweep thresholds 0.00, 0.01, …, 1.00 and pick the one whose
/// `score ≥ t` decisions agree most often with the labels. Ties go to the
/// threshold nearest the default, then to the lower one.
pub fn calibrate(pairs: &[LabeledPair], scorer: &PairScorer) -> Result<Calibration, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyEvalSet);
    }
    let scores: Vec<f64> = pairs
        .iter()
        .map(|p| scorer.score(&p.text_a, &p.text_b))
        .collect::<Result<_, _>>()?;
    let sweep: Vec<SweepPoint> = (0..=100)
        .map(|i| {
            let threshold = i as f64 / 100.0;
            let agree = pairs
                .iter()
                .zip(&scores)
                .filter(|(p, &s)| (s >= threshold) == p.is_match)
                .count();
            SweepPoint {
                threshold,
                agreement: agree as f64 / pairs.len() as f64,
            }
        })
        .collect();
    let best = sweep
        .iter()
        .copied()
        .reduce(|best, p| {
            let closer = (p.threshold - DEFAULT_THRESHOLD).abs() < (best.threshold - DEFAULT_THRESHOLD).abs() - 1e-12;
            if p.agreement > best.agreement || (p.agreement == best.agreement && closer) {
                p
            } else {
                best
            }
        })
        .expect("sweep is non-empty");
    Ok(Calibration {
        scorer: scorer.name(),
        n_pairs: pairs.len(),
        best_threshold: best.threshold,
        best_agreement: best.agreement,
        sweep,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;

    fn card(id: &str, downloads: u64) -> ModelCardRecord {
        ModelCardRecord {
            id: id.into(),
            description: String::new(),
            downloads,
            risk_sections: Vec::new(),
            recommendation_sections: Vec::new(),
            raw_markdown: None,
        }
    }

    fn corpus(n: usize) -> DedupResult {
        DedupResult {
            retained: (0..n).map(|i| card(&format!("m{i:02}"), (i as u64 * 7) % 11)).collect(),
            clusters: BTreeMap::new(),
            dropped_count: 0,
        }
    }

    #[test]
    fn eval_set_takes_the_floor_of_the_fraction() {
        let c = corpus(20);
        let picked = select_eval_set(&c, 0.1).unwrap();
        assert_eq!(picked.len(), 2);
        // Independent check: the two largest download counts.
        let mut d: Vec<u64> = c.retained.iter().map(|c| c.downloads).collect();
        d.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(picked.iter().map(|c| c.downloads).collect::<Vec<_>>(), d[..2]);
        assert_eq!(select_eval_set(&c, 1.0).unwrap().len(), 20);
        assert_eq!(select_eval_set(&corpus(2672), 0.1).unwrap().len(), 267);
        assert_eq!(select_eval_set(&corpus(5), 0.1).unwrap().len(), 1);
        assert!(select_eval_set(&c, 0.0).is_err());
    }

    #[test]
    fn calibration_finds_a_separating_threshold() {
        let s = PairScorer::offline(DEFAULT_SCORER_DIM);
        let pair = |a: &str, b: &str, m| LabeledPair {
            text_a: a.into(),
            text_b: b.into(),
            is_match: m,
        };
        let pairs = [
            pair(
                "reflects gender stereotypes",
                "reflects gender stereotypes in outputs",
                true,
            ),
            pair("leaks personal data", "leaks personal data from training", true),
            pair("reflects gender stereotypes", "fails on long audio", false),
            pair("hallucinates facts", "misclassifies dialect text", false),
        ];
        let cal = calibrate(&pairs, &s).unwrap();
        assert_eq!(cal.sweep.len(), 101);
        assert_eq!(cal.best_agreement, 1.0);
        assert!(calibrate(&[], &s).is_err());
    }
}
