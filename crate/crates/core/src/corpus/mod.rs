//! Model-card and incident corpora: parsing, section extraction,
//! deduplication and funnel statistics.

mod card;
mod dedup;
mod incidents;
mod sections;
mod stats;

use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use card::{parse_model_card, ModelCardRecord, DESCRIPTION_FALLBACK_CHARS};
pub use dedup::{dedup_by_risk_text, normalized_risk_text, risk_fingerprint, DedupResult};
pub use incidents::{load_incidents, parse_incidents, IncidentRecord};
pub use sections::{classify_heading, extract_sections, Section, SectionKind};
pub use stats::CorpusStats;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("card `{id}` has no extractable text")]
    EmptyCard { id: String },
    #[error("card id must be non-empty")]
    EmptyId,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("inconsistent counts: {0}")]
    InconsistentCounts(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One line of a card dump: `{"id", "downloads", "card_markdown"}`.
/// A missing or null `card_markdown` marks a repository without a card.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardDumpEntry {
    pub id: String,
    #[serde(default)]
    pub downloads: u64,
    #[serde(default)]
    pub card_markdown: Option<String>,
}

pub fn load_card_dump(path: impl AsRef<Path>) -> Result<Vec<CardDumpEntry>, CorpusError> {
    let file = std::fs::File::open(path)?;
    parse_card_dump(std::io::BufReader::new(file))
}

pub fn parse_card_dump(reader: impl BufRead) -> Result<Vec<CardDumpEntry>, CorpusError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: CardDumpEntry = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if entry.id.trim().is_empty() {
            return Err(CorpusError::Parse {
                line: line_no,
                message: "empty `id`".into(),
            });
        }
        if !seen.insert(entry.id.clone()) {
            return Err(CorpusError::DuplicateId {
                line: line_no,
                id: entry.id,
            });
        }
        out.push(entry);
    }
    Ok(out)
}

/// A card dump run through parsing, risk filtering and deduplication.
#[derive(Debug, Clone)]
pub struct IngestedCorpus {
    pub stats: CorpusStats,
    pub dedup: DedupResult,
    /// Every parsed card (with or without risk sections), dump order.
    pub parsed: Vec<ModelCardRecord>,
}

/// Parse every card in the dump, keep those with risk sections and collapse
/// duplicates.
pub fn ingest(entries: &[CardDumpEntry]) -> Result<IngestedCorpus, CorpusError> {
    let mut parsed = Vec::new();
    for entry in entries {
        let Some(markdown) = entry.card_markdown.as_deref() else {
            continue;
        };
        match parse_model_card(&entry.id, entry.downloads, markdown) {
            Ok(record) => parsed.push(record),
            Err(CorpusError::EmptyCard { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    let with_risk: Vec<ModelCardRecord> = parsed.iter().filter(|r| r.has_risk_sections()).cloned().collect();
    let dedup = dedup_by_risk_text(&with_risk);
    let stats = CorpusStats::compute(
        entries.len() as u64,
        parsed.len() as u64,
        with_risk.len() as u64,
        dedup.retained.len() as u64,
    )?;
    Ok(IngestedCorpus { stats, dedup, parsed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ingest_counts_funnel() {
        let dump = r##"{"id": "a", "downloads": 5, "card_markdown": "# a\nText model.\n## Risks\nMay leak data."}
{"id": "b", "downloads": 50, "card_markdown": "# b\nOther.\n## Limitations\nMay   leak data."}
{"id": "c", "downloads": 1, "card_markdown": "# c\nNo risks here."}
{"id": "d", "downloads": 1}
{"id": "e", "downloads": 2, "card_markdown": "   "}
"##;
        let entries = parse_card_dump(dump.as_bytes()).unwrap();
        let corpus = ingest(&entries).unwrap();
        assert_eq!(corpus.stats.total_repos, 5);
        assert_eq!(corpus.stats.with_cards, 3);
        assert_eq!(corpus.stats.with_risk_sections, 2);
        assert_eq!(corpus.stats.unique_risk_sections, 1);
        assert_eq!(corpus.dedup.retained[0].id, "b");
    }

    #[test]
    fn dump_rejects_duplicate_ids() {
        let dump = "{\"id\": \"a\"}\n{\"id\": \"a\"}\n";
        assert!(matches!(
            parse_card_dump(dump.as_bytes()),
            Err(CorpusError::DuplicateId { line: 2, .. })
        ));
    }
}
