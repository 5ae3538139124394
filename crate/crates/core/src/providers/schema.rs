//! Registry of the JSON schemas every structured generator reply must
//! satisfy.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use jsonschema::JSONSchema;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const RISK_ITEM_SCHEMA: &str = include_str!("../../schemas/risk_item.schema.json");
pub const MITIGATION_ITEM_SCHEMA: &str = include_str!("../../schemas/mitigation_item.schema.json");
pub const USE_CASE_SCHEMA: &str = include_str!("../../schemas/use_case.schema.json");
pub const MAPPING_SCHEMA: &str = include_str!("../../schemas/mapping.schema.json");
pub const MITIGATION_MAPPING_SCHEMA: &str = include_str!("../../schemas/mitigation_mapping.schema.json");

/// Structured-output task; doubles as the schema tag of a chat request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    RiskExtraction,
    MitigationExtraction,
    UseGeneration,
    RiskMapping,
    MitigationMapping,
}

impl Task {
    pub const ALL: [Task; 5] = [
        Task::RiskExtraction,
        Task::MitigationExtraction,
        Task::UseGeneration,
        Task::RiskMapping,
        Task::MitigationMapping,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::RiskExtraction => "risk_extraction",
            Task::MitigationExtraction => "mitigation_extraction",
            Task::UseGeneration => "use_generation",
            Task::RiskMapping => "risk_mapping",
            Task::MitigationMapping => "mitigation_mapping",
        }
    }

    /// Full JSON schema of the reply expected for this task.
    pub fn schema(self) -> Value {
        let item = |text: &str| {
            let mut v: Value = serde_json::from_str(text).expect("shipped schema is valid JSON");
            if let Some(obj) = v.as_object_mut() {
                obj.remove("$schema");
            }
            v
        };
        let envelope = |key: &str, items: Value| {
            json!({
                "type": "object",
                "required": [key],
                "additionalProperties": false,
                "properties": { key: { "type": "array", "items": items } }
            })
        };
        match self {
            Task::RiskExtraction => envelope("risks", item(RISK_ITEM_SCHEMA)),
            Task::MitigationExtraction => envelope("mitigations", item(MITIGATION_ITEM_SCHEMA)),
            Task::UseGeneration => envelope("uses", item(USE_CASE_SCHEMA)),
            Task::RiskMapping => item(MAPPING_SCHEMA),
            Task::MitigationMapping => item(MITIGATION_MAPPING_SCHEMA),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn compiled() -> &'static BTreeMap<Task, JSONSchema> {
    static CELL: OnceLock<BTreeMap<Task, JSONSchema>> = OnceLock::new();
    CELL.get_or_init(|| {
        Task::ALL
            .iter()
            .map(|&task| {
                let schema = JSONSchema::compile(&task.schema())
                    .unwrap_or_else(|e| panic!("schema for {task} does not compile: {e}"));
                (task, schema)
            })
            .collect()
    })
}

/// Validate `value` against the task's schema; the error lists every
/// violation with its JSON pointer.
pub fn validate(task: Task, value: &Value) -> Result<(), String> {
    compiled()[&task].validate(value).map_err(|errors| {
        errors
            .map(|e| format!("{}: {}", e.instance_path, e))
            .collect::<Vec<_>>()
            .join("; ")
    })
}

/// Extract the JSON object from a model reply, tolerating a surrounding
/// markdown code fence or leading prose.
pub fn parse_json_reply(raw: &str) -> Result<Value, String> {
    let trimmed = raw.trim();
    if let Ok(v) = serde_json::from_str(trimmed) {
        return Ok(v);
    }
    let start = trimmed.find('{');
    let end = trimmed.rfind('}');
    match (start, end) {
        (Some(s), Some(e)) if s < e => {
            serde_json::from_str(&trimmed[s..=e]).map_err(|err| format!("invalid JSON: {err}"))
        }
        _ => Err("reply contains no JSON object".into()),
    }
}
