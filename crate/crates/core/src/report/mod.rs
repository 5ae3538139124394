//! The final risk report: prioritized risks, their mapping to example uses,
//! and mitigations, plus renderers for JSON, Markdown and static HTML.

mod render;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use jsonschema::JSONSchema;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use render::{render, Format};

use crate::generation::{DroppedRisk, MappedRisks, MitigationItem, RiskItem, UseCase};
use crate::retrieval::Backend;

/// Version of the report JSON layout.
pub const SCHEMA_VERSION: u32 = 1;

/// JSON schema of a serialized report.
pub const REPORT_SCHEMA: &str = include_str!("../../schemas/report.schema.json");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReportError {
    #[error("inconsistent indices: {0}")]
    InconsistentIndices(String),
    #[error("priority order violated at risk {0}")]
    Unordered(usize),
    #[error("report does not match its schema: {0}")]
    Schema(String),
}

/// How a report was produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub backend: Backend,
    pub k: usize,
    pub chat_model: String,
    #[serde(default)]
    pub embedding_model: Option<String>,
    pub scorer: String,
    /// Task name → SHA-256 of the prompt file.
    pub prompt_hashes: BTreeMap<String, String>,
    pub retrieved_cards: Vec<String>,
    pub retrieved_incidents: Vec<u64>,
    /// RFC 3339; omitted for offline runs so they stay byte-identical.
    #[serde(default)]
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskReport {
    pub schema_version: u32,
    pub model_id: String,
    pub model_description: String,
    pub uses: Vec<UseCase>,
    /// In priority order.
    pub risks: Vec<RiskItem>,
    /// `mapping[i][j]`: risk `i` concerns use `j`.
    pub mapping: Vec<Vec<bool>>,
    pub mitigations: Vec<MitigationItem>,
    #[serde(default)]
    pub dropped: Vec<DroppedRisk>,
    pub provenance: Provenance,
}

/// Sort key: risks seen in incidents first, then risks concerning more uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PriorityKey {
    pub harm_flag: bool,
    pub use_count: usize,
}

impl PriorityKey {
    pub fn of(risk: &RiskItem, row: &[bool]) -> Self {
        Self {
            harm_flag: risk.from_incident,
            use_count: row.iter().filter(|&&b| b).count(),
        }
    }
}

/// Priority permutation: `order[new] = old`. Stable, so equal keys keep
/// their input order.
pub fn priority_order(risks: &[RiskItem], mapping: &[Vec<bool>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..risks.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(PriorityKey::of(&risks[i], &mapping[i])));
    order
}

/// Reorder risks and mapping rows by priority; returns the permutation too.
pub fn prioritize_risks(risks: &[RiskItem], mapping: &[Vec<bool>]) -> (Vec<RiskItem>, Vec<Vec<bool>>, Vec<usize>) {
    let order = priority_order(risks, mapping);
    let risks = order.iter().map(|&i| risks[i].clone()).collect();
    let mapping = order.iter().map(|&i| mapping[i].clone()).collect();
    (risks, mapping, order)
}

fn check_shapes(
    risks: usize,
    uses: usize,
    mapping: &[Vec<bool>],
    mitigations: &[MitigationItem],
) -> Result<(), ReportError> {
    if mapping.len() != risks {
        return Err(ReportError::InconsistentIndices(format!(
            "{} mapping rows for {risks} risks",
            mapping.len()
        )));
    }
    if let Some((i, row)) = mapping.iter().enumerate().find(|(_, r)| r.len() != uses) {
        return Err(ReportError::InconsistentIndices(format!(
            "mapping row {i} has {} columns for {uses} uses",
            row.len()
        )));
    }
    for (m, item) in mitigations.iter().enumerate() {
        if let Some(&bad) = item.applies_to.iter().find(|&&r| r >= risks) {
            return Err(ReportError::InconsistentIndices(format!(
                "mitigation {m} refers to risk {bad} of {risks}"
            )));
        }
    }
    Ok(())
}

/// Prioritize the mapped risks and re-link mitigations to the new order.
pub fn assemble_report(
    model_id: &str,
    model_description: &str,
    uses: Vec<UseCase>,
    mapped: MappedRisks,
    mitigations: Vec<MitigationItem>,
    provenance: Provenance,
) -> Result<RiskReport, ReportError> {
    check_shapes(mapped.risks.len(), uses.len(), &mapped.mapping, &mitigations)?;
    let (risks, mapping, order) = prioritize_risks(&mapped.risks, &mapped.mapping);
    let mut new_pos = vec![0; order.len()];
    for (new, &old) in order.iter().enumerate() {
        new_pos[old] = new;
    }
    let mitigations = mitigations
        .into_iter()
        .map(|mut m| {
            m.applies_to = m.applies_to.iter().map(|&old| new_pos[old]).collect();
            m.applies_to.sort_unstable();
            m.applies_to.dedup();
            m.unmapped = m.applies_to.is_empty();
            m
        })
        .collect();
    Ok(RiskReport {
        schema_version: SCHEMA_VERSION,
        model_id: model_id.to_string(),
        model_description: model_description.to_string(),
        uses,
        risks,
        mapping,
        mitigations,
        dropped: mapped.dropped,
        provenance,
    })
}

fn compiled_schema() -> &'static JSONSchema {
    static CELL: OnceLock<JSONSchema> = OnceLock::new();
    CELL.get_or_init(|| {
        let schema: Value = serde_json::from_str(REPORT_SCHEMA).expect("report schema is valid JSON");
        JSONSchema::compile(&schema).expect("report schema compiles")
    })
}

/// Validate a serialized report against the schema.
pub fn validate_json(value: &Value) -> Result<(), ReportError> {
    compiled_schema().validate(value).map_err(|errors| {
        ReportError::Schema(
            errors
                .map(|e| format!("{}: {}", e.instance_path, e))
                .collect::<Vec<_>>()
                .join("; "),
        )
    })
}

impl RiskReport {
    /// Check the schema and every structural invariant.
    pub fn validate(&self) -> Result<(), ReportError> {
        validate_json(&serde_json::to_value(self).expect("report serializes"))?;
        check_shapes(self.risks.len(), self.uses.len(), &self.mapping, &self.mitigations)?;
        for i in 1..self.risks.len() {
            let prev = PriorityKey::of(&self.risks[i - 1], &self.mapping[i - 1]);
            let cur = PriorityKey::of(&self.risks[i], &self.mapping[i]);
            if cur > prev {
                return Err(ReportError::Unordered(i));
            }
        }
        Ok(())
    }

    /// Indices of risks that concern no particular use.
    pub fn general_risks(&self) -> Vec<usize> {
        (0..self.risks.len())
            .filter(|&i| !self.mapping[i].iter().any(|&b| b))
            .collect()
    }
}
