use std::sync::OnceLock;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use super::sections::{classify_heading, extract_sections, scan_headings, Section, SectionKind};
use super::CorpusError;
use crate::text::{normalize_whitespace, truncate_chars};

/// Upper bound on the description taken from the card preamble.
pub const DESCRIPTION_FALLBACK_CHARS: usize = 2_000;

/// One parsed model card.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelCardRecord {
    pub id: String,
    pub description: String,
    pub downloads: u64,
    pub risk_sections: Vec<Section>,
    pub recommendation_sections: Vec<Section>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_markdown: Option<String>,
}

impl ModelCardRecord {
    pub fn has_risk_sections(&self) -> bool {
        !self.risk_sections.is_empty()
    }

    /// Sections feeding mitigation extraction: risk-related first, then
    /// recommendations.
    pub fn mitigation_sources(&self) -> impl Iterator<Item = &Section> {
        self.risk_sections.iter().chain(&self.recommendation_sections)
    }
}

fn description_heading() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        RegexBuilder::new(r"\b(description|summary|overview)\b")
            .case_insensitive(true)
            .build()
            .expect("static pattern compiles")
    })
}

fn strip_front_matter(markdown: &str) -> &str {
    let text = markdown.trim_start_matches('\u{feff}');
    let mut lines = text.split_inclusive('\n');
    let mut offset = match lines.next() {
        Some(first) if first.trim_end() == "---" => first.len(),
        _ => return text,
    };
    for line in lines {
        offset += line.len();
        if line.trim_end() == "---" {
            return &text[offset..];
        }
    }
    text
}

fn heading_free_text(lines: &[&str]) -> String {
    let joined: Vec<&str> = lines.iter().map(|l| l.trim_start().trim_start_matches('#')).collect();
    normalize_whitespace(&joined.join("\n"))
}

/// Parse one card into a record.
///
/// The description is the body of a dedicated description/summary/overview
/// section when one exists, otherwise the text preceding the first risk or
/// recommendation heading; either way capped at
/// [`DESCRIPTION_FALLBACK_CHARS`].
pub fn parse_model_card(id: &str, downloads: u64, markdown: &str) -> Result<ModelCardRecord, CorpusError> {
    if id.trim().is_empty() {
        return Err(CorpusError::EmptyId);
    }
    let body = strip_front_matter(markdown);
    if body.trim().is_empty() {
        return Err(CorpusError::EmptyCard { id: id.to_string() });
    }

    let sections = extract_sections(body, &SectionKind::ALL);
    let (recommendation_sections, risk_sections): (Vec<Section>, Vec<Section>) = sections
        .into_iter()
        .partition(|s| !s.kinds.iter().any(|k| k.is_risk_related()));

    let description = describe(body);
    if description.is_empty() {
        return Err(CorpusError::EmptyCard { id: id.to_string() });
    }

    Ok(ModelCardRecord {
        id: id.to_string(),
        description,
        downloads,
        risk_sections,
        recommendation_sections,
        raw_markdown: None,
    })
}

fn describe(body: &str) -> String {
    let lines: Vec<&str> = body.lines().collect();
    let headings = scan_headings(&lines);

    let dedicated = headings.iter().enumerate().find_map(|(i, h)| {
        if !description_heading().is_match(&h.text) || !classify_heading(&h.text).is_empty() {
            return None;
        }
        let end = headings[i + 1..]
            .iter()
            .find(|n| n.level <= h.level || !classify_heading(&n.text).is_empty())
            .map_or(lines.len(), |n| n.line);
        let text = heading_free_text(&lines[h.line + 1..end]);
        (!text.is_empty()).then_some(text)
    });

    let text = dedicated.unwrap_or_else(|| {
        let end = headings
            .iter()
            .find(|h| !classify_heading(&h.text).is_empty())
            .map_or(lines.len(), |h| h.line);
        let preamble = heading_free_text(&lines[..end]);
        if preamble.is_empty() {
            heading_free_text(&lines)
        } else {
            preamble
        }
    });
    truncate_chars(&text, DESCRIPTION_FALLBACK_CHARS).trim_end().to_string()
}
