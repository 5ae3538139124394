use std::collections::BTreeMap;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::card::ModelCardRecord;
use crate::text::normalize_whitespace;

/// Outcome of collapsing cards whose risk sections are exact copies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupResult {
    /// One record per distinct risk text, in order of first appearance.
    pub retained: Vec<ModelCardRecord>,
    /// Fingerprint → member ids (input order).
    pub clusters: BTreeMap<String, Vec<String>>,
    pub dropped_count: usize,
}

impl DedupResult {
    pub fn get(&self, id: &str) -> Option<&ModelCardRecord> {
        self.retained.iter().find(|r| r.id == id)
    }
}

/// Whitespace-normalized concatenation of a card's risk-section texts.
pub fn normalized_risk_text(record: &ModelCardRecord) -> String {
    let joined: Vec<&str> = record.risk_sections.iter().map(|s| s.text.as_str()).collect();
    normalize_whitespace(&joined.join(" "))
}

/// SHA-256 (hex) of [`normalized_risk_text`].
pub fn risk_fingerprint(record: &ModelCardRecord) -> String {
    hex::encode(Sha256::digest(normalized_risk_text(record).as_bytes()))
}

fn outranks(candidate: &ModelCardRecord, incumbent: &ModelCardRecord) -> bool {
    candidate.downloads > incumbent.downloads
        || (candidate.downloads == incumbent.downloads && candidate.id < incumbent.id)
}

/// Keep the most-downloaded card for every distinct risk text (ties go to
/// the lexicographically smallest id).
///
/// Records without risk sections carry no risk text and are skipped; callers
/// are expected to filter them out first.
pub fn dedup_by_risk_text(records: &[ModelCardRecord]) -> DedupResult {
    let mut order: Vec<String> = Vec::new();
    let mut best: HashMap<String, usize> = HashMap::new();
    let mut clusters: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut members = 0usize;

    for (idx, record) in records.iter().enumerate() {
        if !record.has_risk_sections() {
            continue;
        }
        members += 1;
        let fp = risk_fingerprint(record);
        clusters.entry(fp.clone()).or_default().push(record.id.clone());
        match best.get_mut(&fp) {
            Some(current) => {
                if outranks(record, &records[*current]) {
                    *current = idx;
                }
            }
            None => {
                best.insert(fp.clone(), idx);
                order.push(fp);
            }
        }
    }

    let retained: Vec<ModelCardRecord> = order.iter().map(|fp| records[best[fp]].clone()).collect();
    DedupResult {
        dropped_count: members - retained.len(),
        retained,
        clusters,
    }
}
