use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::providers::Task;

/// A prompt file: system text, a `---` line, then the user template with
/// `{placeholder}` fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub system: String,
    pub user: String,
    /// SHA-256 of the file contents, recorded in run metadata.
    pub hash: String,
}

impl PromptTemplate {
    pub fn parse(source: &str) -> Result<Self, String> {
        let (system, user) = source
            .split_once("\n---\n")
            .ok_or_else(|| "prompt file lacks a `---` separator line".to_string())?;
        Ok(Self {
            system: system.trim().to_string(),
            user: user.trim().to_string(),
            hash: hex::encode(Sha256::digest(source.as_bytes())),
        })
    }

    fn fill(template: &str, vars: &BTreeMap<String, String>) -> String {
        vars.iter()
            .fold(template.to_string(), |acc, (k, v)| acc.replace(&format!("{{{k}}}"), v))
    }

    /// Substitute the variables into both halves.
    pub fn render(&self, vars: &BTreeMap<String, String>) -> (String, String) {
        (Self::fill(&self.system, vars), Self::fill(&self.user, vars))
    }
}

/// One template per task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    templates: BTreeMap<Task, PromptTemplate>,
}

const BUILTIN: [(Task, &str); 5] = [
    (Task::RiskExtraction, include_str!("../../prompts/risk_extraction.md")),
    (
        Task::MitigationExtraction,
        include_str!("../../prompts/mitigation_extraction.md"),
    ),
    (Task::UseGeneration, include_str!("../../prompts/use_generation.md")),
    (Task::RiskMapping, include_str!("../../prompts/risk_mapping.md")),
    (
        Task::MitigationMapping,
        include_str!("../../prompts/mitigation_mapping.md"),
    ),
];

impl PromptSet {
    /// The prompts shipped with the library.
    pub fn builtin() -> Self {
        let templates = BUILTIN
            .iter()
            .map(|&(task, src)| (task, PromptTemplate::parse(src).expect("shipped prompt is well-formed")))
            .collect();
        Self { templates }
    }

    /// Load `<task>.md` for every task from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, String> {
        let mut templates = BTreeMap::new();
        for task in Task::ALL {
            let path = dir.join(format!("{}.md", task.as_str()));
            let src = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            templates.insert(
                task,
                PromptTemplate::parse(&src).map_err(|e| format!("{}: {e}", path.display()))?,
            );
        }
        Ok(Self { templates })
    }

    pub fn get(&self, task: Task) -> &PromptTemplate {
        &self.templates[&task]
    }

    /// Task name → prompt hash.
    pub fn hashes(&self) -> BTreeMap<String, String> {
        self.templates
            .iter()
            .map(|(t, p)| (t.as_str().to_string(), p.hash.clone()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_prompts_parse_and_mention_their_placeholders() {
        let set = PromptSet::builtin();
        assert!(set.get(Task::RiskExtraction).user.contains("{section_text}"));
        assert!(set.get(Task::RiskMapping).user.contains("{uses_block}"));
        assert!(set.get(Task::UseGeneration).user.contains("{model_description}"));
        assert_eq!(set.hashes().len(), 5);
    }

    #[test]
    fn render_substitutes_known_fields() {
        let t = PromptTemplate::parse("sys {a}\n---\nuser {a} {b}").unwrap();
        let vars: BTreeMap<String, String> = [("a".to_string(), "1".to_string())].into();
        assert_eq!(t.render(&vars), ("sys 1".to_string(), "user 1 {b}".to_string()));
        assert!(PromptTemplate::parse("no separator").is_err());
    }
}
