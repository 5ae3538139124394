//! Heading-based extraction of risk and recommendation sections from
//! model-card markdown.

use std::fmt;
use std::sync::OnceLock;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

/// Closed vocabulary of section kinds recognised in model cards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    Risks,
    Limitations,
    Bias,
    EthicalConsiderations,
    OutOfScopeUses,
    Misuse,
    ResponsibilityAndSafety,
    Recommendations,
}

impl SectionKind {
    pub const ALL: [SectionKind; 8] = [
        SectionKind::Risks,
        SectionKind::Limitations,
        SectionKind::Bias,
        SectionKind::EthicalConsiderations,
        SectionKind::OutOfScopeUses,
        SectionKind::Misuse,
        SectionKind::ResponsibilityAndSafety,
        SectionKind::Recommendations,
    ];

    /// Every kind whose content describes risks.
    pub const RISK_RELATED: [SectionKind; 7] = [
        SectionKind::Risks,
        SectionKind::Limitations,
        SectionKind::Bias,
        SectionKind::EthicalConsiderations,
        SectionKind::OutOfScopeUses,
        SectionKind::Misuse,
        SectionKind::ResponsibilityAndSafety,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SectionKind::Risks => "risks",
            SectionKind::Limitations => "limitations",
            SectionKind::Bias => "bias",
            SectionKind::EthicalConsiderations => "ethical_considerations",
            SectionKind::OutOfScopeUses => "out_of_scope_uses",
            SectionKind::Misuse => "misuse",
            SectionKind::ResponsibilityAndSafety => "responsibility_and_safety",
            SectionKind::Recommendations => "recommendations",
        }
    }

    pub fn is_risk_related(self) -> bool {
        self != SectionKind::Recommendations
    }

    fn pattern(self) -> &'static str {
        match self {
            SectionKind::Risks => r"\brisks?\b",
            SectionKind::Limitations => r"\blimitations?\b",
            SectionKind::Bias => r"\bbias(es|ed)?\b",
            SectionKind::EthicalConsiderations => r"\bethic(s|al)\b",
            SectionKind::OutOfScopeUses => r"\bout[\s-]*of[\s-]*scope\b",
            SectionKind::Misuse => r"\bmis-?use\b|\bmalicious\s+uses?\b",
            SectionKind::ResponsibilityAndSafety => r"\bresponsibility\b|\bsafety\b",
            SectionKind::Recommendations => r"\brecommendations?\b",
        }
    }
}

impl fmt::Display for SectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One extracted section. A compound heading such as
/// "Bias, Risks, and Limitations" yields a single section carrying every
/// matched kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub kinds: Vec<SectionKind>,
    pub heading: String,
    pub text: String,
}

impl Section {
    pub fn has_kind(&self, kind: SectionKind) -> bool {
        self.kinds.contains(&kind)
    }

    /// Primary kind: the first in canonical order.
    pub fn primary_kind(&self) -> SectionKind {
        self.kinds[0]
    }
}

fn kind_regexes() -> &'static [(SectionKind, Regex)] {
    static CELL: OnceLock<Vec<(SectionKind, Regex)>> = OnceLock::new();
    CELL.get_or_init(|| {
        SectionKind::ALL
            .iter()
            .map(|&kind| {
                let re = RegexBuilder::new(kind.pattern())
                    .case_insensitive(true)
                    .build()
                    .expect("static pattern compiles");
                (kind, re)
            })
            .collect()
    })
}

/// Every kind the heading text names, in canonical order.
pub fn classify_heading(heading: &str) -> Vec<SectionKind> {
    kind_regexes()
        .iter()
        .filter(|(_, re)| re.is_match(heading))
        .map(|(kind, _)| *kind)
        .collect()
}

/// An ATX heading found while scanning lines.
#[derive(Debug, Clone)]
pub(crate) struct Heading {
    pub line: usize,
    pub level: usize,
    pub text: String,
}

/// Scan for ATX headings (`#` to `######`), ignoring fenced code blocks.
pub(crate) fn scan_headings(lines: &[&str]) -> Vec<Heading> {
    let mut headings = Vec::new();
    let mut in_fence = false;
    for (idx, raw) in lines.iter().enumerate() {
        let line = raw.trim_start();
        if line.starts_with("```") || line.starts_with("~~~") {
            in_fence = !in_fence;
            continue;
        }
        if in_fence {
            continue;
        }
        let level = line.chars().take_while(|&c| c == '#').count();
        if level == 0 || level > 6 {
            continue;
        }
        let rest = &line[level..];
        if !(rest.is_empty() || rest.starts_with(char::is_whitespace)) {
            continue;
        }
        let text = rest.trim().trim_end_matches('#').trim().to_string();
        headings.push(Heading { line: idx, level, text });
    }
    headings
}

/// Extract the sections whose heading matches one of `kinds`.
///
/// Heading matching is case-insensitive and works at any level. A section
/// body runs until the next heading of equal or higher level, or until any
/// nested heading that itself names a known section kind (that subsection is
/// reported on its own). Sections with blank bodies are skipped.
pub fn extract_sections(markdown: &str, kinds: &[SectionKind]) -> Vec<Section> {
    let lines: Vec<&str> = markdown.lines().collect();
    let headings = scan_headings(&lines);
    let classified: Vec<Vec<SectionKind>> = headings.iter().map(|h| classify_heading(&h.text)).collect();

    let mut out = Vec::new();
    for (i, heading) in headings.iter().enumerate() {
        let matched: Vec<SectionKind> = classified[i].iter().copied().filter(|k| kinds.contains(k)).collect();
        if matched.is_empty() {
            continue;
        }
        let end = headings[i + 1..]
            .iter()
            .zip(&classified[i + 1..])
            .find(|(h, c)| h.level <= heading.level || !c.is_empty())
            .map_or(lines.len(), |(h, _)| h.line);
        let body = lines[heading.line + 1..end].join("\n");
        let body = body.trim();
        if body.is_empty() {
            continue;
        }
        out.push(Section {
            kinds: matched,
            heading: heading.text.clone(),
            text: body.to_string(),
        });
    }
    out
}
