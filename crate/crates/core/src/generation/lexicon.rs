//! Word lists used by the rule-based generator and by the format check on
//! generated risks and mitigations.

/// Verbs that open a risk statement. `free` verbs are matched in their
/// third-person form anywhere in a sentence; the others only after a modal
/// or preposition because their inflected form doubles as a noun.
pub(crate) const RISK_VERBS: &[(&str, bool)] = &[
    ("amplify", true),
    ("contain", true),
    ("create", true),
    ("deceive", true),
    ("degrade", true),
    ("disclose", true),
    ("discriminate", true),
    ("displace", true),
    ("distort", true),
    ("enable", true),
    ("encode", true),
    ("endanger", true),
    ("erode", true),
    ("exacerbate", true),
    ("exhibit", true),
    ("expose", true),
    ("fabricate", true),
    ("facilitate", true),
    ("fail", true),
    ("favor", true),
    ("generate", true),
    ("hallucinate", true),
    ("ignore", true),
    ("impersonate", true),
    ("infringe", true),
    ("inherit", true),
    ("invent", true),
    ("lack", true),
    ("leak", false),
    ("manipulate", true),
    ("memorize", true),
    ("misclassify", true),
    ("misidentify", true),
    ("misinterpret", true),
    ("mislabel", true),
    ("mislead", true),
    ("misrepresent", true),
    ("mistranslate", true),
    ("omit", true),
    ("overlook", true),
    ("perpetuate", true),
    ("produce", true),
    ("promote", true),
    ("propagate", true),
    ("reflect", true),
    ("reinforce", true),
    ("replicate", true),
    ("reproduce", true),
    ("spread", false),
    ("struggle", true),
    ("undermine", true),
    ("underperform", true),
    ("underrepresent", true),
    ("violate", true),
];

/// Verbs that open a mitigation statement (imperative form).
pub(crate) const MITIGATION_VERBS: &[&str] = &[
    "add",
    "adopt",
    "apply",
    "assess",
    "audit",
    "avoid",
    "check",
    "combine",
    "conduct",
    "consult",
    "curate",
    "disclose",
    "document",
    "employ",
    "establish",
    "evaluate",
    "filter",
    "implement",
    "include",
    "incorporate",
    "inform",
    "involve",
    "keep",
    "label",
    "limit",
    "mitigate",
    "monitor",
    "obtain",
    "perform",
    "provide",
    "reduce",
    "refrain",
    "remove",
    "report",
    "restrict",
    "retrain",
    "review",
    "supervise",
    "test",
    "validate",
    "verify",
    "watermark",
];

/// Tokens after which a bare verb is read as a verb (`may reflect`,
/// `used to generate`).
pub(crate) const VERB_CONTEXT: &[&str] = &[
    "also",
    "can",
    "could",
    "do",
    "does",
    "frequently",
    "may",
    "might",
    "occasionally",
    "often",
    "sometimes",
    "tend",
    "to",
    "will",
    "would",
];

/// Prepositions after which a gerund is read as a verb (`prone to
/// generating`, `capable of producing`).
pub(crate) const GERUND_CONTEXT: &[&str] = &["at", "by", "for", "from", "in", "of", "risk", "to"];

/// Tokens that make a nearby verb part of a recommendation.
pub(crate) const ADVICE_MARKERS: &[&str] = &[
    "advise",
    "advised",
    "consider",
    "encourage",
    "encouraged",
    "important",
    "must",
    "need",
    "needs",
    "ought",
    "please",
    "recommend",
    "recommendation",
    "recommendations",
    "recommended",
    "recommends",
    "should",
    "suggest",
    "suggested",
];

pub(crate) const NEGATIONS: &[&str] = &[
    "cannot",
    "can't",
    "didn't",
    "doesn't",
    "don't",
    "isn't",
    "never",
    "no",
    "not",
    "shouldn't",
    "won't",
    "wouldn't",
];

/// Verbs whose object is an artifact the model outputs.
pub(crate) const PRODUCTION_VERBS: &[&str] = &[
    "compose",
    "create",
    "depict",
    "draw",
    "fabricate",
    "generate",
    "output",
    "paint",
    "produce",
    "render",
    "synthesize",
    "write",
];

pub(crate) fn third_person(base: &str) -> String {
    let bytes = base.as_bytes();
    let last = bytes[bytes.len() - 1];
    let before = bytes.len().checked_sub(2).map(|i| bytes[i]);
    let vowel = |c: u8| b"aeiou".contains(&c);
    if last == b'y' && before.is_some_and(|c| !vowel(c)) {
        format!("{}ies", &base[..base.len() - 1])
    } else if base.ends_with('s')
        || base.ends_with("sh")
        || base.ends_with("ch")
        || base.ends_with('x')
        || base.ends_with('z')
        || base.ends_with('o')
    {
        format!("{base}es")
    } else {
        format!("{base}s")
    }
}

pub(crate) fn gerund(base: &str) -> String {
    match base {
        "omit" => "omitting".into(),
        _ if base.ends_with("ie") => format!("{}ying", &base[..base.len() - 2]),
        _ if base.ends_with('e') && !base.ends_with("ee") => format!("{}ing", &base[..base.len() - 1]),
        _ => format!("{base}ing"),
    }
}

/// Base form of `word` if it is any inflection (base, third person,
/// gerund) of a lexicon verb.
pub(crate) fn base_of<'a>(word: &str, verbs: impl IntoIterator<Item = &'a str>) -> Option<&'a str> {
    verbs
        .into_iter()
        .find(|&b| word == b || word == third_person(b) || word == gerund(b))
}

/// True when `word` is an inflected form of any risk or mitigation verb.
pub fn is_lexicon_verb(word: &str) -> bool {
    let word = word.to_lowercase();
    base_of(&word, RISK_VERBS.iter().map(|(v, _)| *v)).is_some()
        || base_of(&word, MITIGATION_VERBS.iter().copied()).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugation() {
        assert_eq!(third_person("amplify"), "amplifies");
        assert_eq!(third_person("reflect"), "reflects");
        assert_eq!(third_person("reproduce"), "reproduces");
        assert_eq!(third_person("mislead"), "misleads");
        assert_eq!(gerund("generate"), "generating");
        assert_eq!(gerund("omit"), "omitting");
        assert_eq!(gerund("filter"), "filtering");
    }

    #[test]
    fn lexicons_are_sorted_and_lowercase() {
        let risk: Vec<&str> = RISK_VERBS.iter().map(|(v, _)| *v).collect();
        for list in [
            &risk[..],
            MITIGATION_VERBS,
            VERB_CONTEXT,
            ADVICE_MARKERS,
            PRODUCTION_VERBS,
        ] {
            let mut sorted = list.to_vec();
            sorted.sort_unstable();
            assert_eq!(sorted, list);
            assert!(list.iter().all(|w| w.chars().all(|c| c.is_ascii_lowercase())));
        }
    }

    #[test]
    fn lexicon_lookup_accepts_inflections() {
        assert!(is_lexicon_verb("perpetuates"));
        assert!(is_lexicon_verb("Filter"));
        assert!(is_lexicon_verb("generating"));
        assert!(!is_lexicon_verb("model"));
    }
}
