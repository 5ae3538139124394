use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::CorpusError;

/// One entry from an AI-incident database export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidentRecord {
    pub id: u64,
    pub description: String,
    #[serde(default)]
    pub report_count: u64,
    #[serde(default)]
    pub metadata: BTreeMap<String, Value>,
}

/// Load incidents from a JSONL file (one object per line, blank lines
/// ignored). Order follows the file.
pub fn load_incidents(path: impl AsRef<Path>) -> Result<Vec<IncidentRecord>, CorpusError> {
    let file = std::fs::File::open(path)?;
    parse_incidents(std::io::BufReader::new(file))
}

pub fn parse_incidents(reader: impl BufRead) -> Result<Vec<IncidentRecord>, CorpusError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: IncidentRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if record.description.trim().is_empty() {
            return Err(CorpusError::Parse {
                line: line_no,
                message: "empty `description`".into(),
            });
        }
        if !seen.insert(record.id) {
            return Err(CorpusError::DuplicateId {
                line: line_no,
                id: record.id.to_string(),
            });
        }
        out.push(record);
    }
    Ok(out)
}
