//! Threshold matching of retrieved risks (R) against pseudo ground truth (G).

use serde::{Deserialize, Serialize};

use super::similarity::PairScorer;
use super::EvalError;

/// How many ground-truth items one retrieved item may match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cardinality {
    /// Each r and each g is matched at most once.
    #[default]
    OneToOne,
    /// Each g is matched at most once, but one r may cover several g.
    ManyToOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub r: usize,
    pub g: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub r: Vec<String>,
    pub g: Vec<String>,
    pub matches: Vec<Match>,
    pub precision: f64,
    pub recall: f64,
    pub corpus_score: f64,
    /// Set when R or G was empty (precision and recall are then 0).
    pub empty_sets: bool,
}

/// Counts derived from a score matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    pub matches: Vec<Match>,
    pub precision: f64,
    pub recall: f64,
    pub corpus_score: f64,
}

pub fn check_threshold(threshold: f64) -> Result<(), EvalError> {
    if threshold.is_finite() && threshold >= 0.0 {
        Ok(())
    } else {
        Err(EvalError::InvalidThreshold(threshold))
    }
}

/// Greedy assignment over a `|R| × |G|` score matrix: pairs are visited by
/// descending score (ties: smaller r, then smaller g) and accepted when the
/// score reaches `threshold` and the cardinality rule allows it.
pub fn greedy_match(scores: &[Vec<f64>], n_g: usize, threshold: f64, cardinality: Cardinality) -> MatchOutcome {
    let n_r = scores.len();
    if n_r == 0 || n_g == 0 {
        return MatchOutcome {
            matches: Vec::new(),
            precision: 0.0,
            recall: 0.0,
            corpus_score: 0.0,
        };
    }
    let mut pairs: Vec<Match> = Vec::with_capacity(n_r * n_g);
    for (r, row) in scores.iter().enumerate() {
        for (g, &score) in row.iter().enumerate() {
            if score >= threshold {
                pairs.push(Match { r, g, score });
            }
        }
    }
    pairs.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.r.cmp(&b.r)).then(a.g.cmp(&b.g)));

    let mut r_used = vec![false; n_r];
    let mut g_used = vec![false; n_g];
    let mut matches = Vec::new();
    for p in pairs {
        let r_free = cardinality == Cardinality::ManyToOne || !r_used[p.r];
        if r_free && !g_used[p.g] {
            r_used[p.r] = true;
            g_used[p.g] = true;
            matches.push(p);
        }
    }
    let count = |v: &[bool]| v.iter().filter(|&&b| b).count() as f64;
    let corpus_score = (0..n_g)
        .map(|g| scores.iter().map(|row| row[g]).fold(0.0f64, f64::max))
        .sum::<f64>()
        / n_g as f64;
    MatchOutcome {
        precision: count(&r_used) / n_r as f64,
        recall: count(&g_used) / n_g as f64,
        corpus_score,
        matches,
    }
}

/// Score every pair with `scorer` and match.
pub fn match_and_score(
    r: &[String],
    g: &[String],
    threshold: f64,
    scorer: &PairScorer,
    cardinality: Cardinality,
) -> Result<MatchResult, EvalError> {
    check_threshold(threshold)?;
    let scores = scorer.matrix(r, g)?;
    let out = greedy_match(&scores, g.len(), threshold, cardinality);
    Ok(MatchResult {
        r: r.to_vec(),
        g: g.to_vec(),
        matches: out.matches,
        precision: out.precision,
        recall: out.recall,
        corpus_score: out.corpus_score,
        empty_sets: r.is_empty() || g.is_empty(),
    })
}
