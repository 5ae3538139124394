//! Sparse (TF-IDF) and dense (embedding) top-k retrieval over card
//! descriptions and incident descriptions.

mod dense;
mod sparse;
pub mod vector;

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{IncidentRecord, ModelCardRecord, Section};
use crate::providers::{EmbeddingProvider, ProviderError};
use crate::scalar::Scalar;

pub use dense::DenseIndex;
pub use sparse::SparseIndex;
pub use vector::{cosine, Cosine};

/// On-disk format version of persisted index files.
pub const INDEX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("cannot build an index over zero documents")]
    EmptyCorpus,
    #[error("index is empty")]
    EmptyIndex,
    #[error("query text is empty")]
    EmptyQuery,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("index was built with `{index}` but the embedding provider is `{provider}`")]
    ModelMismatch { index: String, provider: String },
    #[error("the dense backend needs an embedding provider")]
    MissingEmbedder,
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("index file {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("index format: {0}")]
    Format(String),
}

/// One ranked document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit<T> {
    pub id: String,
    pub score: T,
}

pub(crate) fn check_query(query: &str, k: usize) -> Result<(), RetrievalError> {
    if k == 0 {
        return Err(RetrievalError::InvalidK);
    }
    if query.trim().is_empty() {
        return Err(RetrievalError::EmptyQuery);
    }
    Ok(())
}

/// The `k` best documents by score (descending), ties broken by ascending
/// id, with `exclude` removed before ranking.
pub(crate) fn rank<T: Scalar>(ids: &[String], scores: Vec<T>, k: usize, exclude: Option<&str>) -> Vec<Hit<T>> {
    let mut hits: Vec<Hit<T>> = ids
        .iter()
        .zip(scores)
        .filter(|(id, _)| Some(id.as_str()) != exclude)
        .map(|(id, score)| Hit { id: id.clone(), score })
        .collect();
    hits.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("finite scores")
            .then_with(|| a.id.cmp(&b.id))
    });
    hits.truncate(k);
    hits
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Tfidf,
    Dense,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Tfidf => "tfidf",
            Backend::Dense => "dense",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tfidf" | "sparse" => Ok(Backend::Tfidf),
            "dense" => Ok(Backend::Dense),
            other => Err(format!("unknown backend `{other}` (expected tfidf or dense)")),
        }
    }
}

/// Either kind of index, as persisted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", content = "index", rename_all = "lowercase")]
pub enum AnyIndex {
    Tfidf(SparseIndex<f64>),
    Dense(DenseIndex<f64>),
}

impl AnyIndex {
    pub fn build(
        backend: Backend,
        docs: &[(String, String)],
        embedder: Option<&dyn EmbeddingProvider>,
    ) -> Result<Self, RetrievalError> {
        match backend {
            Backend::Tfidf => Ok(AnyIndex::Tfidf(SparseIndex::build(docs)?)),
            Backend::Dense => Ok(AnyIndex::Dense(DenseIndex::build(
                embedder.ok_or(RetrievalError::MissingEmbedder)?,
                docs,
            )?)),
        }
    }

    pub fn backend(&self) -> Backend {
        match self {
            AnyIndex::Tfidf(_) => Backend::Tfidf,
            AnyIndex::Dense(_) => Backend::Dense,
        }
    }

    pub fn top_k(
        &self,
        query: &str,
        k: usize,
        exclude: Option<&str>,
        embedder: Option<&dyn EmbeddingProvider>,
    ) -> Result<Vec<Hit<f64>>, RetrievalError> {
        match self {
            AnyIndex::Tfidf(idx) => idx.top_k(query, k, exclude),
            AnyIndex::Dense(idx) => idx.top_k(embedder.ok_or(RetrievalError::MissingEmbedder)?, query, k, exclude),
        }
    }
}

/// The documents retrieval draws from: deduplicated cards and incidents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub cards: Vec<ModelCardRecord>,
    pub incidents: Vec<IncidentRecord>,
}

impl KnowledgeBase {
    pub fn card(&self, id: &str) -> Option<&ModelCardRecord> {
        self.cards.iter().find(|c| c.id == id)
    }

    pub fn incident(&self, id: u64) -> Option<&IncidentRecord> {
        self.incidents.iter().find(|i| i.id == id)
    }

    fn card_docs(&self) -> Vec<(String, String)> {
        self.cards
            .iter()
            .map(|c| (c.id.clone(), c.description.clone()))
            .collect()
    }

    fn incident_docs(&self) -> Vec<(String, String)> {
        self.incidents
            .iter()
            .map(|i| (i.id.to_string(), i.description.clone()))
            .collect()
    }
}

/// Card and incident indices built with one backend.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexBundle {
    pub cards: AnyIndex,
    pub incidents: AnyIndex,
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    format_version: u32,
    role: String,
    #[serde(flatten)]
    index: AnyIndex,
}

#[derive(Serialize, Deserialize)]
struct CorpusFile {
    format_version: u32,
    #[serde(flatten)]
    kb: KnowledgeBase,
}

const CARDS_FILE: &str = "cards.index.json";
const INCIDENTS_FILE: &str = "incidents.index.json";
const CORPUS_FILE: &str = "corpus.json";

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), RetrievalError> {
    let io_err = |source| RetrievalError::Io {
        path: path.to_path_buf(),
        source,
    };
    let text = serde_json::to_string(value).map_err(|e| RetrievalError::Format(e.to_string()))?;
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, text).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, RetrievalError> {
    let text = fs::read_to_string(path).map_err(|source| RetrievalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| RetrievalError::Format(format!("{}: {e}", path.display())))
}

impl IndexBundle {
    pub fn build(
        backend: Backend,
        kb: &KnowledgeBase,
        embedder: Option<&dyn EmbeddingProvider>,
    ) -> Result<Self, RetrievalError> {
        Ok(Self {
            cards: AnyIndex::build(backend, &kb.card_docs(), embedder)?,
            incidents: AnyIndex::build(backend, &kb.incident_docs(), embedder)?,
        })
    }

    pub fn backend(&self) -> Backend {
        self.cards.backend()
    }

    /// Embedding model of a dense bundle.
    pub fn embedding_model(&self) -> Option<&str> {
        match &self.cards {
            AnyIndex::Dense(d) => Some(d.model()),
            AnyIndex::Tfidf(_) => None,
        }
    }

    /// Write the two index files and the knowledge base into `dir`; returns
    /// the written paths.
    pub fn save(&self, kb: &KnowledgeBase, dir: &Path) -> Result<Vec<PathBuf>, RetrievalError> {
        fs::create_dir_all(dir).map_err(|source| RetrievalError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut written = Vec::new();
        for (name, role, index) in [
            (CARDS_FILE, "cards", &self.cards),
            (INCIDENTS_FILE, "incidents", &self.incidents),
        ] {
            let path = dir.join(name);
            write_json(
                &path,
                &IndexFile {
                    format_version: INDEX_FORMAT_VERSION,
                    role: role.into(),
                    index: index.clone(),
                },
            )?;
            written.push(path);
        }
        let path = dir.join(CORPUS_FILE);
        write_json(
            &path,
            &CorpusFile {
                format_version: INDEX_FORMAT_VERSION,
                kb: kb.clone(),
            },
        )?;
        written.push(path);
        Ok(written)
    }

    pub fn load(dir: &Path) -> Result<(Self, KnowledgeBase), RetrievalError> {
        let check = |v: u32, what: &str| {
            if v == INDEX_FORMAT_VERSION {
                Ok(())
            } else {
                Err(RetrievalError::Format(format!(
                    "{what}: format version {v}, expected {INDEX_FORMAT_VERSION}"
                )))
            }
        };
        let cards: IndexFile = read_json(&dir.join(CARDS_FILE))?;
        check(cards.format_version, CARDS_FILE)?;
        let incidents: IndexFile = read_json(&dir.join(INCIDENTS_FILE))?;
        check(incidents.format_version, INCIDENTS_FILE)?;
        let corpus: CorpusFile = read_json(&dir.join(CORPUS_FILE))?;
        check(corpus.format_version, CORPUS_FILE)?;
        if cards.index.backend() != incidents.index.backend() {
            return Err(RetrievalError::Format(
                "card and incident indices use different backends".into(),
            ));
        }
        Ok((
            Self {
                cards: cards.index,
                incidents: incidents.index,
            },
            corpus.kb,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardHit {
    pub id: String,
    pub score: f64,
    pub risk_sections: Vec<Section>,
    pub recommendation_sections: Vec<Section>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidentHit {
    pub id: u64,
    pub score: f64,
    pub description: String,
}

/// What the generator sees: the top-k cards (with their risk and
/// recommendation sections) and the top-k incidents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalContext {
    pub k: usize,
    pub backend: Backend,
    pub card_hits: Vec<CardHit>,
    pub incident_hits: Vec<IncidentHit>,
}

/// Retrieve the `k` most similar cards and incidents for a model
/// description. `exclude_card` removes the model's own card (evaluation).
pub fn retrieve_context(
    bundle: &IndexBundle,
    kb: &KnowledgeBase,
    description: &str,
    k: usize,
    exclude_card: Option<&str>,
    embedder: Option<&dyn EmbeddingProvider>,
) -> Result<RetrievalContext, RetrievalError> {
    let card_hits = bundle
        .cards
        .top_k(description, k, exclude_card, embedder)?
        .into_iter()
        .map(|h| {
            let card = kb
                .card(&h.id)
                .ok_or_else(|| RetrievalError::Format(format!("index references unknown card `{}`", h.id)))?;
            Ok(CardHit {
                id: h.id,
                score: h.score,
                risk_sections: card.risk_sections.clone(),
                recommendation_sections: card.recommendation_sections.clone(),
            })
        })
        .collect::<Result<Vec<_>, RetrievalError>>()?;
    let incident_hits = bundle
        .incidents
        .top_k(description, k, None, embedder)?
        .into_iter()
        .map(|h| {
            let id: u64 =
                h.id.parse()
                    .map_err(|_| RetrievalError::Format(format!("bad incident id `{}`", h.id)))?;
            let incident = kb
                .incident(id)
                .ok_or_else(|| RetrievalError::Format(format!("index references unknown incident {id}")))?;
            Ok(IncidentHit {
                id,
                score: h.score,
                description: incident.description.clone(),
            })
        })
        .collect::<Result<Vec<_>, RetrievalError>>()?;
    Ok(RetrievalContext {
        k,
        backend: bundle.backend(),
        card_hits,
        incident_hits,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::corpus::parse_model_card;
    use crate::providers::HashEmbedder;

    fn kb() -> KnowledgeBase {
        let cards = [
            (
                "org/chat",
                "A chat model for customer support.\n## Risks\nMay hallucinate refunds.",
            ),
            (
                "org/img",
                "A text-to-image diffusion model.\n## Limitations\nMay render hands poorly.",
            ),
            (
                "org/asr",
                "Speech recognition for call centers.\n## Bias\nMay underperform on accents.",
            ),
        ]
        .iter()
        .map(|(id, md)| parse_model_card(id, 10, md).unwrap())
        .collect();
        let incidents = [
            "Chatbot promised refunds",
            "Image model created fake photos",
            "Voice system misheard callers",
            "Recruiting tool biased",
        ]
        .iter()
        .enumerate()
        .map(|(i, d)| IncidentRecord {
            id: i as u64 + 1,
            description: d.to_string(),
            report_count: 1,
            metadata: BTreeMap::new(),
        })
        .collect();
        KnowledgeBase { cards, incidents }
    }

    #[test]
    fn context_carries_payload_and_respects_k() {
        let kb = kb();
        let bundle = IndexBundle::build(Backend::Tfidf, &kb, None).unwrap();
        let ctx = retrieve_context(&bundle, &kb, "customer support chat model", 2, None, None).unwrap();
        assert_eq!(ctx.card_hits.len(), 2);
        assert_eq!(ctx.card_hits[0].id, "org/chat");
        assert_eq!(ctx.card_hits[0].risk_sections.len(), 1);
        assert!(ctx.card_hits.windows(2).all(|w| w[0].score >= w[1].score));
        let wide = retrieve_context(&bundle, &kb, "customer support", 10, None, None).unwrap();
        assert_eq!(wide.incident_hits.len(), 4);
        let excl = retrieve_context(&bundle, &kb, "customer support chat model", 3, Some("org/chat"), None).unwrap();
        assert!(excl.card_hits.iter().all(|h| h.id != "org/chat"));
    }

    #[test]
    fn dense_bundle_needs_embedder_and_is_deterministic() {
        let kb = kb();
        assert!(matches!(
            IndexBundle::build(Backend::Dense, &kb, None),
            Err(RetrievalError::MissingEmbedder)
        ));
        let p = HashEmbedder::new(512);
        let bundle = IndexBundle::build(Backend::Dense, &kb, Some(&p)).unwrap();
        let a = retrieve_context(&bundle, &kb, "image diffusion", 2, None, Some(&p)).unwrap();
        let b = retrieve_context(&bundle, &kb, "image diffusion", 2, None, Some(&p)).unwrap();
        assert_eq!(a, b);
        assert_eq!(bundle.embedding_model(), Some("hash-embed-512"));
    }

    #[test]
    fn bundle_round_trips_through_disk() {
        let kb = kb();
        let dir = std::env::temp_dir().join(format!("riskrag-index-{}", std::process::id()));
        for backend in [Backend::Tfidf, Backend::Dense] {
            let p = HashEmbedder::new(64);
            let bundle = IndexBundle::build(backend, &kb, Some(&p)).unwrap();
            bundle.save(&kb, &dir).unwrap();
            let (loaded, loaded_kb) = IndexBundle::load(&dir).unwrap();
            assert_eq!(loaded, bundle);
            assert_eq!(loaded_kb, kb);
        }
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn ranking_breaks_ties_by_id() {
        let ids: Vec<String> = ["b", "a", "c"].iter().map(|s| s.to_string()).collect();
        let hits = rank(&ids, vec![0.5, 0.5, 0.9], 3, None);
        let order: Vec<&str> = hits.iter().map(|h| h.id.as_str()).collect();
        assert_eq!(order, ["c", "a", "b"]);
        assert_eq!("sparse".parse::<Backend>().unwrap(), Backend::Tfidf);
        assert!("bm25".parse::<Backend>().is_err());
    }
}
