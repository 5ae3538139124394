//! Deterministic rule-based generator.
//!
//! This is what the offline chat provider runs for every structured task.
//! The rules are deliberately simple and fully lexical, so the pipeline's
//! behavior on a fixture is predictable by hand.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::explore::{self, cue_matches, domain_hits, modality_of, Modality, DOMAINS, FALLBACK_PROFILE};
use super::lexicon::{
    base_of, gerund, third_person, ADVICE_MARKERS, GERUND_CONTEXT, MITIGATION_VERBS, NEGATIONS, PRODUCTION_VERBS,
    RISK_VERBS, VERB_CONTEXT,
};
use super::types::{Layer, DEFAULT_HARM_TYPES};
use crate::text::{content_tokens, sentences, tokenize};

/// Longest object phrase kept after the verb, in words.
const MAX_OBJECT_WORDS: usize = 30;

/// One extracted statement: the full text and its leading verb.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub text: String,
    pub verb: String,
}

struct Word<'a> {
    end: usize,
    lower: String,
    _raw: &'a str,
}

fn word_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[A-Za-z][A-Za-z'’-]*").expect("static pattern compiles"))
}

fn words(sentence: &str) -> Vec<Word<'_>> {
    word_re()
        .find_iter(sentence)
        .map(|m| Word {
            end: m.end(),
            lower: m.as_str().to_lowercase().replace('’', "'"),
            _raw: m.as_str(),
        })
        .collect()
}

fn strip_markup(sentence: &str) -> String {
    sentence.replace("**", "").replace("__", "").replace('`', "")
}

fn is_negation(word: &str) -> bool {
    NEGATIONS.contains(&word) || word.ends_with("n't")
}

fn negated(ws: &[Word<'_>], i: usize, window: usize) -> bool {
    ws[i.saturating_sub(window)..i].iter().any(|w| is_negation(&w.lower))
}

/// Object phrase following the verb: leading separators and trailing
/// punctuation removed, capped at [`MAX_OBJECT_WORDS`] words.
fn object_phrase(rest: &str) -> Option<String> {
    let rest = rest.trim_start_matches(|c: char| c.is_whitespace() || matches!(c, ',' | ';' | ':' | '-'));
    let capped: Vec<&str> = rest.split_whitespace().take(MAX_OBJECT_WORDS).collect();
    let joined = capped.join(" ");
    let trimmed = joined
        .trim_end_matches(|c: char| matches!(c, '.' | ',' | ';' | ':' | '!' | '?' | '(' | '-') || c.is_whitespace());
    // A phrase needs at least one alphanumeric word.
    if trimmed.chars().any(char::is_alphanumeric) {
        Some(trimmed.to_string())
    } else {
        None
    }
}

fn risk_verb_at(ws: &[Word<'_>], i: usize) -> Option<&'static str> {
    let w = ws[i].lower.as_str();
    let prev = i.checked_sub(1).map(|j| ws[j].lower.as_str());
    let prev2 = i.checked_sub(2).map(|j| ws[j].lower.as_str());
    let in_verb_context = prev.is_some_and(|p| VERB_CONTEXT.contains(&p))
        || (prev.is_some_and(|p| p.ends_with("ly") && p.len() > 3) && prev2.is_some_and(|p| VERB_CONTEXT.contains(&p)));
    RISK_VERBS.iter().find_map(|&(base, free)| {
        let hit = (free && w == third_person(base))
            || (w == base && in_verb_context)
            || (w == gerund(base) && prev.is_some_and(|p| GERUND_CONTEXT.contains(&p)));
        hit.then_some(base)
    })
}

/// Risk statements in `section_text`: at most one per sentence, opened by
/// the first non-negated risk verb, rewritten to third person.
pub fn extract_risks(section_text: &str) -> Vec<Statement> {
    let mut out: Vec<Statement> = Vec::new();
    for sentence in sentences(section_text) {
        let sentence = strip_markup(&sentence);
        let ws = words(&sentence);
        for i in 0..ws.len() {
            let Some(base) = risk_verb_at(&ws, i) else { continue };
            if negated(&ws, i, 3) {
                continue;
            }
            let Some(object) = object_phrase(&sentence[ws[i].end..]) else {
                continue;
            };
            let verb = third_person(base);
            let item = Statement {
                text: format!("{verb} {object}"),
                verb,
            };
            if !out.contains(&item) {
                out.push(item);
            }
            break;
        }
    }
    out
}

/// Mitigation statements: a mitigation verb that opens the sentence or
/// follows an advice marker ("should", "we recommend", ...), in base form.
pub fn extract_mitigations(section_text: &str) -> Vec<Statement> {
    let mut out: Vec<Statement> = Vec::new();
    for sentence in sentences(section_text) {
        let sentence = strip_markup(&sentence);
        let ws = words(&sentence);
        for i in 0..ws.len() {
            let w = ws[i].lower.as_str();
            let base_hit = MITIGATION_VERBS.iter().find(|&&v| v == w);
            let gerund_hit = MITIGATION_VERBS.iter().find(|&&v| gerund(v) == w);
            let advised = |window: usize| {
                ws[i.saturating_sub(window)..i]
                    .iter()
                    .any(|p| ADVICE_MARKERS.contains(&p.lower.as_str()))
            };
            let base = match (base_hit, gerund_hit) {
                (Some(&v), _) if i == 0 || advised(4) => v,
                (_, Some(&v)) if advised(2) => v,
                _ => continue,
            };
            if negated(&ws, i, 3) {
                continue;
            }
            let Some(object) = object_phrase(&sentence[ws[i].end..]) else {
                continue;
            };
            let item = Statement {
                text: format!("{base} {object}"),
                verb: base.to_string(),
            };
            if !out.contains(&item) {
                out.push(item);
            }
            break;
        }
    }
    out
}

const HARM_KEYWORDS: &[(&str, &[&str])] = &[
    (
        "representation_and_toxicity",
        &[
            "bias",
            "stereotyp",
            "discriminat",
            "toxic",
            "offensive",
            "hate",
            "racis",
            "sexis",
            "gender",
            "racial",
            "ethnic",
            "minorit",
            "underrepresent",
            "fairness",
            "unfair",
            "slur",
            "derogatory",
            "prejudic",
            "marginali",
            "dialect",
            "demographic",
        ],
    ),
    (
        "malicious_use",
        &[
            "malicious",
            "misuse",
            "deepfake",
            "explicit",
            "sexual",
            "nsfw",
            "porn",
            "nude",
            "nonconsensual",
            "non-consensual",
            "violen",
            "abuse",
            "harass",
            "scam",
            "fraud",
            "spam",
            "weapon",
            "cyberattack",
            "propaganda",
            "disinformation",
            "exploit",
            "illegal",
            "impersonat",
        ],
    ),
    (
        "information_and_safety",
        &[
            "privacy",
            "private",
            "personal",
            "leak",
            "disclos",
            "sensitive",
            "confidential",
            "unsafe",
            "safety",
            "danger",
            "inappropriate",
            "trust",
            "pii",
            "memoriz",
            "expose",
            "security",
        ],
    ),
    (
        "misinformation",
        &[
            "misinform",
            "false",
            "incorrect",
            "inaccura",
            "hallucinat",
            "fabricat",
            "factual",
            "mislead",
            "wrong",
            "error",
            "nonsens",
            "unreliable",
            "outdated",
        ],
    ),
    (
        "human_autonomy",
        &[
            "overreli",
            "overtrust",
            "dependen",
            "manipulat",
            "persua",
            "autonomy",
            "deceiv",
            "anthropomorph",
            "emotional",
            "addict",
        ],
    ),
    (
        "socioeconomic_and_environmental",
        &[
            "labor",
            "labour",
            "worker",
            "economic",
            "inequal",
            "environment",
            "carbon",
            "energy",
            "emission",
            "copyright",
            "intellectual property",
            "artist",
            "infring",
            "livelihood",
            "displace",
            "plagiar",
            "licens",
        ],
    ),
];

const HUMAN_INTERACTION_CUES: &[&str] = &[
    "user",
    "trust",
    "people",
    "person",
    "chatbot",
    "conversation",
    "interact",
    "overreli",
    "emotional",
    "child",
    "minors",
    "individual",
    "consumer",
    "patient",
    "reader",
    "relian",
    "companion",
    "role-play",
];

const SYSTEMIC_CUES: &[&str] = &[
    "society",
    "societal",
    "economic",
    "labor",
    "labour",
    "job",
    "environment",
    "copyright",
    "artist",
    "market",
    "institution",
    "democra",
    "election",
    "inequal",
    "carbon",
    "energy",
    "culture",
    "workforce",
    "livelihood",
];

fn count_cues(cues: &[&str], lower: &str, tokens: &[String]) -> usize {
    cues.iter().filter(|c| cue_matches(c, lower, tokens)).count()
}

/// Classify a risk on both taxonomy dimensions. Harm types outside
/// `harm_types` are never returned; ties follow the keyword table order and
/// a text without any cue falls back to `misinformation` (or the first
/// configured type).
pub fn classify(text: &str, harm_types: &[String]) -> (Layer, String) {
    let lower = text.to_lowercase();
    let tokens = tokenize(&lower);

    let human = count_cues(HUMAN_INTERACTION_CUES, &lower, &tokens);
    let systemic = count_cues(SYSTEMIC_CUES, &lower, &tokens);
    let layer = if human == 0 && systemic == 0 {
        Layer::Capability
    } else if human >= systemic {
        Layer::HumanInteraction
    } else {
        Layer::Systemic
    };

    let mut best: Option<(&str, usize)> = None;
    for &(harm, cues) in HARM_KEYWORDS {
        if !harm_types.iter().any(|h| h == harm) {
            continue;
        }
        let n = count_cues(cues, &lower, &tokens);
        if n > 0 && best.is_none_or(|(_, b)| n > b) {
            best = Some((harm, n));
        }
    }
    let harm = match best {
        Some((h, _)) => h.to_string(),
        None if harm_types.iter().any(|h| h == DEFAULT_HARM_TYPES[1]) => DEFAULT_HARM_TYPES[1].to_string(),
        None => harm_types
            .first()
            .cloned()
            .unwrap_or_else(|| DEFAULT_HARM_TYPES[1].to_string()),
    };
    (layer, harm)
}

/// A candidate use with its estimated likelihood in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleUse {
    pub domain: String,
    pub purpose: String,
    pub capability: String,
    pub ai_deployer: String,
    pub ai_subject: String,
    pub likelihood: f64,
}

/// Score every domain against the description (capability prior plus cue
/// overlap) and return the `n_candidates` best, most likely first.
pub fn candidate_uses(description: &str, n_candidates: usize) -> Vec<RuleUse> {
    let profile = explore::detect_capability(description).unwrap_or(&FALLBACK_PROFILE);
    let lower = description.to_lowercase();
    let tokens = tokenize(&lower);
    let mut scored: Vec<(usize, f64)> = DOMAINS
        .iter()
        .enumerate()
        .map(|(idx, d)| {
            let prior = profile
                .domains
                .iter()
                .position(|&name| name == d.name)
                .map_or(0.0, |pos| 1.0 - 0.05 * pos as f64);
            let hits = domain_hits(d, &lower, &tokens).min(3);
            (idx, prior + 0.3 * hits as f64)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let max = scored.first().map_or(0.0, |s| s.1);
    let visual = profile.outputs.contains(&Modality::Image);
    let labels = profile.outputs.contains(&Modality::Label);
    scored
        .into_iter()
        .take(n_candidates)
        .map(|(idx, score)| {
            let d = &DOMAINS[idx];
            let purpose = if visual {
                d.image_purpose.to_string()
            } else if labels {
                format!("{} for {}", profile.name, d.name.to_lowercase())
            } else {
                d.text_purpose.to_string()
            };
            RuleUse {
                domain: d.name.to_string(),
                purpose,
                capability: profile.name.to_string(),
                ai_deployer: d.deployer.to_string(),
                ai_subject: d.subject.to_string(),
                likelihood: if max > 0.0 {
                    (score / max * 1e4).round() / 1e4
                } else {
                    0.0
                },
            }
        })
        .collect()
}

/// Per-risk decision of the adaptation/mapping step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskDecision {
    pub index: usize,
    pub action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub uses: Vec<usize>,
}

/// Minimal view of a use needed for mapping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UseRef {
    pub domain: String,
    #[serde(default)]
    pub purpose: String,
    #[serde(default)]
    pub ai_subject: String,
}

const LANGUAGES: &[&str] = &[
    "arabic",
    "bengali",
    "chinese",
    "dutch",
    "english",
    "french",
    "german",
    "greek",
    "hebrew",
    "hindi",
    "indonesian",
    "italian",
    "japanese",
    "korean",
    "persian",
    "polish",
    "portuguese",
    "russian",
    "spanish",
    "swahili",
    "swedish",
    "thai",
    "turkish",
    "ukrainian",
    "urdu",
    "vietnamese",
];

/// The single non-English language a monolingual model targets, if any.
pub fn target_language(description: &str) -> Option<String> {
    let tokens = tokenize(description);
    if tokens
        .iter()
        .any(|t| t == "multilingual" || t == "english" || t == "crosslingual")
    {
        return None;
    }
    let mut found: Vec<&str> = LANGUAGES
        .iter()
        .copied()
        .filter(|l| tokens.iter().any(|t| t == l))
        .collect();
    found.dedup();
    match found.as_slice() {
        [one] => {
            let mut c = one.chars();
            c.next().map(|f| f.to_uppercase().chain(c).collect())
        }
        _ => None,
    }
}

fn english_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // The optional capitalized word before it marks a compound name such as
    // "African American English", which names a dialect, not the language.
    RE.get_or_init(|| Regex::new(r"(\b[A-Z][a-z]+\s+)?\b(?i:english)\b").expect("static pattern compiles"))
}

/// Point a risk about English at the model's language instead. Risks that
/// already mention that language (e.g. translation pairs) stay as written.
pub fn adapt_language(text: &str, language: &str) -> Option<String> {
    let lang = language.to_lowercase();
    if tokenize(text).contains(&lang) {
        return None;
    }
    let adapted = english_re().replace_all(text, |c: &regex::Captures<'_>| match c.get(1) {
        Some(_) => c[0].to_string(),
        None => language.to_string(),
    });
    (adapted != text).then(|| adapted.into_owned())
}

/// Why a risk cannot apply to a model with the given profile, if it cannot.
fn inapplicable(text: &str, profile: &explore::CapabilityProfile) -> Option<String> {
    let tokens = tokenize(text);
    let first = tokens.first()?;
    let handled = |m: Modality| profile.inputs.contains(&m) || profile.outputs.contains(&m);
    let outputs = profile
        .outputs
        .iter()
        .map(|m| m.noun())
        .collect::<Vec<_>>()
        .join(" and ");
    if base_of(first, PRODUCTION_VERBS.iter().copied()).is_some() {
        if let Some(m) = tokens[1..].iter().find_map(|t| modality_of(t)) {
            if !profile.outputs.contains(&m) {
                return Some(format!(
                    "concerns producing {}, but the model's output is {outputs}",
                    m.noun()
                ));
            }
        }
        return None;
    }
    tokens[1..]
        .iter()
        .filter_map(|t| modality_of(t))
        .find(|m| matches!(m, Modality::Image | Modality::Audio | Modality::Video) && !handled(*m))
        .map(|m| {
            format!(
                "concerns {}, which the model neither takes as input nor produces",
                m.noun()
            )
        })
}

fn use_cues(u: &UseRef) -> Vec<String> {
    match explore::domain(&u.domain) {
        Some(d) => d.cues.iter().map(|c| c.to_string()).collect(),
        None => content_tokens(&format!("{} {}", u.domain, u.ai_subject))
            .into_iter()
            .filter(|t| t.len() > 3)
            .map(|t| format!("{t}$"))
            .collect(),
    }
}

/// Indices of the uses a risk concerns. A risk naming no domain at all is
/// generic and concerns every use.
pub fn relevant_uses(text: &str, uses: &[UseRef]) -> Vec<usize> {
    let lower = text.to_lowercase();
    let tokens = tokenize(&lower);
    let domain_specific = DOMAINS.iter().any(|d| domain_hits(d, &lower, &tokens) > 0);
    if !domain_specific {
        return (0..uses.len()).collect();
    }
    uses.iter()
        .enumerate()
        .filter(|(_, u)| use_cues(u).iter().any(|c| cue_matches(c, &lower, &tokens)))
        .map(|(j, _)| j)
        .collect()
}

/// Adapt, drop and map every risk for the described model.
pub fn decide_risks(description: &str, risks: &[String], uses: &[UseRef]) -> Vec<RiskDecision> {
    let profile = explore::detect_capability(description);
    let language = target_language(description);
    risks
        .iter()
        .enumerate()
        .map(|(index, text)| {
            if let Some(reason) = profile.and_then(|p| inapplicable(text, p)) {
                return RiskDecision {
                    index,
                    action: "drop".into(),
                    text: None,
                    reason: Some(reason),
                    uses: Vec::new(),
                };
            }
            let adapted = language.as_ref().and_then(|l| adapt_language(text, l));
            let final_text = adapted.as_deref().unwrap_or(text);
            RiskDecision {
                index,
                action: if adapted.is_some() { "adapt" } else { "keep" }.into(),
                reason: adapted.as_ref().map(|_| {
                    format!(
                        "adjusted to the model's target language ({})",
                        language.as_deref().unwrap_or_default()
                    )
                }),
                uses: relevant_uses(final_text, uses),
                text: adapted,
            }
        })
        .collect()
}

/// Tokens too generic to link a mitigation to a risk.
const WEAK_TOKENS: &[&str] = &[
    "case",
    "certain",
    "data",
    "different",
    "example",
    "however",
    "information",
    "new",
    "people",
    "potential",
    "result",
    "risk",
    "specific",
    "user",
    "way",
];

fn linking_tokens(text: &str) -> Vec<String> {
    let mut tokens = content_tokens(text);
    if !tokens.is_empty() {
        tokens.remove(0);
    }
    tokens.retain(|t| t.len() >= 3 && !WEAK_TOKENS.contains(&t.as_str()));
    tokens
}

/// For each mitigation, the risks sharing at least one content word with it.
pub fn link_mitigations(mitigations: &[String], risks: &[String]) -> Vec<Vec<usize>> {
    let risk_tokens: Vec<Vec<String>> = risks.iter().map(|r| linking_tokens(r)).collect();
    mitigations
        .iter()
        .map(|m| {
            let mt = linking_tokens(m);
            risk_tokens
                .iter()
                .enumerate()
                .filter(|(_, rt)| rt.iter().any(|t| mt.contains(t)))
                .map(|(i, _)| i)
                .collect()
        })
        .collect()
}
