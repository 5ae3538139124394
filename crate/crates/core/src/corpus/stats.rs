use serde::{Deserialize, Serialize};

use super::CorpusError;

/// Funnel counts for a card corpus, from repositories down to unique risk
/// texts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total_repos: u64,
    pub with_cards: u64,
    pub with_risk_sections: u64,
    pub unique_risk_sections: u64,
    pub duplicate_fraction: f64,
}

impl CorpusStats {
    pub fn compute(
        total_repos: u64,
        with_cards: u64,
        with_risk_sections: u64,
        unique_risk_sections: u64,
    ) -> Result<Self, CorpusError> {
        if with_cards > total_repos {
            return Err(CorpusError::InconsistentCounts(format!(
                "with_cards ({with_cards}) exceeds total_repos ({total_repos})"
            )));
        }
        if with_risk_sections > with_cards {
            return Err(CorpusError::InconsistentCounts(format!(
                "with_risk_sections ({with_risk_sections}) exceeds with_cards ({with_cards})"
            )));
        }
        if unique_risk_sections > with_risk_sections {
            return Err(CorpusError::InconsistentCounts(format!(
                "unique_risk_sections ({unique_risk_sections}) exceeds with_risk_sections ({with_risk_sections})"
            )));
        }
        let duplicate_fraction = if with_risk_sections == 0 {
            0.0
        } else {
            1.0 - unique_risk_sections as f64 / with_risk_sections as f64
        };
        Ok(Self {
            total_repos,
            with_cards,
            with_risk_sections,
            unique_risk_sections,
            duplicate_fraction,
        })
    }
}
