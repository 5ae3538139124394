//! Small text utilities shared across modules.

/// Lowercased word tokens split on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Word 1-grams followed by word 2-grams (joined by a single space).
pub fn unigrams_and_bigrams(tokens: &[String]) -> Vec<String> {
    let mut grams: Vec<String> = tokens.to_vec();
    grams.extend(tokens.windows(2).map(|w| format!("{} {}", w[0], w[1])));
    grams
}

/// Collapse every whitespace run into one space and trim both ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Prefix of at most `max_chars` characters, cut on a char boundary.
pub fn truncate_chars(text: &str, max_chars: usize) -> &str {
    match text.char_indices().nth(max_chars) {
        Some((idx, _)) => &text[..idx],
        None => text,
    }
}

/// Split prose into sentences.
///
/// Lines are treated as hard boundaries (markdown bullets and table rows are
/// independent statements); within a line, `.`, `!` and `?` followed by
/// whitespace end a sentence. List markers are stripped.
pub fn sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = strip_list_marker(line.trim());
        if line.is_empty() {
            continue;
        }
        let mut start = 0;
        let bytes: Vec<(usize, char)> = line.char_indices().collect();
        for (pos, &(idx, ch)) in bytes.iter().enumerate() {
            if matches!(ch, '.' | '!' | '?') {
                let at_end = pos + 1 == bytes.len();
                let before_space = bytes.get(pos + 1).is_some_and(|(_, c)| c.is_whitespace());
                if at_end || before_space {
                    let sentence = line[start..idx + ch.len_utf8()].trim();
                    if !sentence.is_empty() {
                        out.push(sentence.to_string());
                    }
                    start = idx + ch.len_utf8();
                }
            }
        }
        let tail = line[start..].trim();
        if !tail.is_empty() {
            out.push(tail.to_string());
        }
    }
    out
}

fn strip_list_marker(line: &str) -> &str {
    let trimmed = line.trim_start_matches(['-', '*', '+', '>', '|']).trim_start();
    let digits = trimmed.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 {
        let rest = &trimmed[digits..];
        if let Some(rest) = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')')) {
            return rest.trim_start();
        }
    }
    trimmed.trim_end_matches('|').trim_end()
}

const STOPWORDS: &[&str] = &[
    "a", "about", "after", "ai", "all", "also", "an", "and", "any", "are", "as", "at", "be", "been", "being", "but",
    "by", "can", "could", "do", "does", "for", "from", "has", "have", "how", "if", "in", "into", "is", "it", "its",
    "may", "might", "model", "models", "more", "most", "not", "of", "on", "or", "other", "our", "out", "output",
    "outputs", "over", "such", "system", "systems", "than", "that", "the", "their", "them", "then", "there", "these",
    "they", "this", "those", "through", "to", "under", "up", "use", "used", "uses", "using", "via", "was", "we",
    "were", "what", "when", "where", "which", "while", "who", "will", "with", "within", "without", "would", "you",
    "your",
];

/// True for function words and a few domain words too common to carry meaning.
pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

/// Crude plural folding: `suggestions` → `suggestion`, `biases` → `bias`.
pub fn fold_plural(token: &str) -> String {
    if token.len() > 4 && token.ends_with("ies") {
        format!("{}y", &token[..token.len() - 3])
    } else if token.len() > 4 && (token.ends_with("ses") || token.ends_with("xes")) {
        token[..token.len() - 2].to_string()
    } else if token.len() > 3 && token.ends_with('s') && !token.ends_with("ss") {
        token[..token.len() - 1].to_string()
    } else {
        token.to_string()
    }
}

/// Content tokens: tokenized, stopwords removed, plurals folded.
pub fn content_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| !is_stopword(t))
        .map(|t| fold_plural(&t))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stopwords_are_sorted_for_binary_search() {
        let mut sorted = STOPWORDS.to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, STOPWORDS);
    }

    #[test]
    fn tokenizer_lowercases_and_splits_on_punctuation() {
        assert_eq!(tokenize("Non-English, TEXT!"), ["non", "english", "text"]);
        assert!(tokenize("  ...  ").is_empty());
    }

    #[test]
    fn bigrams_follow_unigrams() {
        let grams = unigrams_and_bigrams(&tokenize("a b c"));
        assert_eq!(grams, ["a", "b", "c", "a b", "b c"]);
    }

    #[test]
    fn sentence_split_handles_bullets_and_terminators() {
        let s = sentences("- First item. Second one!\n* third\n\n1. Fourth? yes");
        assert_eq!(s, ["First item.", "Second one!", "third", "Fourth?", "yes"]);
    }

    #[test]
    fn truncation_respects_char_boundaries() {
        assert_eq!(truncate_chars("héllo", 2), "hé");
        assert_eq!(truncate_chars("hi", 10), "hi");
    }

    #[test]
    fn plural_folding() {
        assert_eq!(fold_plural("suggestions"), "suggestion");
        assert_eq!(fold_plural("biases"), "bias");
        assert_eq!(fold_plural("stereotypes"), "stereotype");
        assert_eq!(fold_plural("policies"), "policy");
        assert_eq!(fold_plural("class"), "class");
    }
}
