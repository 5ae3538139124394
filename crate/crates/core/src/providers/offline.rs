//! Deterministic chat provider backed by the rule-based generator.

use serde_json::{json, Value};

use super::{ChatProvider, ChatRequest, ProviderError, Task};
use crate::generation::rules;
use crate::generation::DEFAULT_HARM_TYPES;

/// Answers every structured task from the request's template variables
/// using [`crate::generation::rules`]. Replies are plain JSON strings, exactly
/// as a remote provider would return them.
#[derive(Debug, Clone, Default)]
pub struct OfflineChat;

impl OfflineChat {
    pub const MODEL_NAME: &'static str = "offline-rules-v1";

    pub fn new() -> Self {
        Self
    }
}

fn var<'a>(request: &'a ChatRequest, key: &str) -> Result<&'a str, ProviderError> {
    request
        .variables
        .get(key)
        .map(String::as_str)
        .ok_or_else(|| ProviderError::InvalidResponse(format!("{}: missing variable `{key}`", request.task)))
}

fn json_var<T: serde::de::DeserializeOwned>(request: &ChatRequest, key: &str) -> Result<T, ProviderError> {
    serde_json::from_str(var(request, key)?)
        .map_err(|e| ProviderError::InvalidResponse(format!("{}: variable `{key}`: {e}", request.task)))
}

impl ChatProvider for OfflineChat {
    fn model_name(&self) -> &str {
        Self::MODEL_NAME
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let reply: Value = match request.task {
            Task::RiskExtraction => {
                let harm_types: Vec<String> = match request.variables.get("harm_types") {
                    Some(_) => json_var(request, "harm_types")?,
                    None => DEFAULT_HARM_TYPES.iter().map(|s| s.to_string()).collect(),
                };
                let risks: Vec<Value> = rules::extract_risks(var(request, "section_text")?)
                    .into_iter()
                    .map(|s| {
                        let (layer, harm) = rules::classify(&s.text, &harm_types);
                        json!({"text": s.text, "verb": s.verb, "layer": layer, "harm_type": harm})
                    })
                    .collect();
                json!({ "risks": risks })
            }
            Task::MitigationExtraction => {
                let items = rules::extract_mitigations(var(request, "section_text")?);
                json!({ "mitigations": items })
            }
            Task::UseGeneration => {
                let n: usize = var(request, "n_candidates")?
                    .parse()
                    .map_err(|e| ProviderError::InvalidResponse(format!("n_candidates: {e}")))?;
                json!({ "uses": rules::candidate_uses(var(request, "model_description")?, n) })
            }
            Task::RiskMapping => {
                let risks: Vec<String> = json_var(request, "risks")?;
                let uses: Vec<rules::UseRef> = json_var(request, "uses")?;
                let decisions = rules::decide_risks(var(request, "model_description")?, &risks, &uses);
                json!({ "risks": decisions })
            }
            Task::MitigationMapping => {
                let mitigations: Vec<String> = json_var(request, "mitigations")?;
                let risks: Vec<String> = json_var(request, "risks")?;
                let links = rules::link_mitigations(&mitigations, &risks);
                let rows: Vec<Value> = links
                    .into_iter()
                    .enumerate()
                    .map(|(index, risks)| json!({"index": index, "risks": risks}))
                    .collect();
                json!({ "mitigations": rows })
            }
        };
        Ok(reply.to_string())
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::providers::{chat_complete, schema};

    fn request(task: Task, vars: &[(&str, &str)]) -> ChatRequest {
        ChatRequest {
            task,
            system: "s".into(),
            user: "u".into(),
            variables: vars
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect::<BTreeMap<_, _>>(),
            temperature: 0.0,
            max_tokens: 1,
        }
    }

    #[test]
    fn replies_validate_against_task_schemas() {
        let p = OfflineChat::new();
        let cases = [
            request(Task::RiskExtraction, &[("section_text", "It may reflect gender bias.")]),
            request(Task::MitigationExtraction, &[("section_text", "Filter outputs.")]),
            request(
                Task::UseGeneration,
                &[("model_description", "a chatbot"), ("n_candidates", "12")],
            ),
            request(
                Task::RiskMapping,
                &[
                    ("model_description", "a chatbot"),
                    ("risks", r#"["reflects gender bias"]"#),
                    ("uses", r#"[{"domain": "Education"}]"#),
                ],
            ),
            request(
                Task::MitigationMapping,
                &[
                    ("mitigations", r#"["filter gender bias"]"#),
                    ("risks", r#"["reflects gender bias"]"#),
                ],
            ),
        ];
        for req in cases {
            let raw = p.complete(&req).unwrap();
            let parsed = schema::parse_json_reply(&raw).unwrap();
            schema::validate(req.task, &parsed).unwrap_or_else(|e| panic!("{}: {e}\n{raw}", req.task));
            assert_eq!(raw, p.complete(&req).unwrap(), "deterministic");
            assert_eq!(chat_complete(&p, &req, 0, &|_| Ok(())).unwrap().retry_count, 0);
        }
    }

    #[test]
    fn missing_variable_is_reported() {
        let err = OfflineChat.complete(&request(Task::RiskExtraction, &[])).unwrap_err();
        assert!(matches!(err, ProviderError::InvalidResponse(m) if m.contains("section_text")));
    }
}
