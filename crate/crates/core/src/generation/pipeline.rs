use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::prompts::PromptSet;
use super::rules::RiskDecision;
use super::types::*;
use crate::corpus::Section;
use crate::evaluation::{EvalError, PairScorer};
use crate::providers::{chat_complete, ChatProvider, ChatRequest, ProviderError, Task};
use crate::retrieval::RetrievalContext;

#[derive(Debug, thiserror::Error)]
pub enum GenerationError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Scorer(#[from] EvalError),
    #[error("generator configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    /// Uses requested from the generator before ranking.
    pub n_candidates: usize,
    /// Uses kept for the report.
    pub n_top: usize,
    /// Pair-similarity threshold for merging duplicate risks.
    pub merge_threshold: f64,
    /// Repair re-asks after an invalid reply.
    pub max_repairs: u32,
    pub temperature: f64,
    pub max_tokens: u32,
    pub taxonomy: Taxonomy,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_candidates: 12,
            n_top: 4,
            merge_threshold: 0.6,
            max_repairs: 2,
            temperature: 0.0,
            max_tokens: 2048,
            taxonomy: Taxonomy::default(),
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GenerationError> {
        if self.n_top > self.n_candidates {
            return Err(GenerationError::Config(format!(
                "n_top ({}) exceeds n_candidates ({})",
                self.n_top, self.n_candidates
            )));
        }
        if !(0.0..=1.0).contains(&self.merge_threshold) {
            return Err(GenerationError::Config("merge_threshold must lie in [0, 1]".into()));
        }
        if self.taxonomy.harm_types.is_empty() {
            return Err(GenerationError::Config("taxonomy needs at least one harm type".into()));
        }
        Ok(())
    }
}

/// Everything the generator produced for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationOutput {
    pub uses: Vec<UseCase>,
    pub mapped: MappedRisks,
    pub mitigations: Vec<MitigationItem>,
}

/// The generator: a chat provider plus prompts, configuration and the
/// pair scorer used for merging.
pub struct Generator<'a> {
    pub chat: &'a dyn ChatProvider,
    pub scorer: &'a PairScorer,
    pub prompts: &'a PromptSet,
    pub config: GeneratorConfig,
}

fn numbered(lines: impl IntoIterator<Item = String>) -> String {
    lines
        .into_iter()
        .enumerate()
        .map(|(i, l)| format!("[{i}] {l}"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn items(v: &Value, key: &str) -> Vec<Value> {
    v[key].as_array().cloned().unwrap_or_default()
}

fn str_field<'v>(v: &'v Value, key: &str) -> &'v str {
    v[key].as_str().unwrap_or_default()
}

/// Every item's text must begin with its declared verb.
fn check_verb_first(key: &'static str) -> impl Fn(&Value) -> Result<(), String> {
    move |v: &Value| {
        for (i, item) in items(v, key).iter().enumerate() {
            let text = str_field(item, "text");
            let verb = str_field(item, "verb");
            if text.split_whitespace().next() != Some(verb) {
                return Err(format!("{key}[{i}].text must start with its verb `{verb}`"));
            }
        }
        Ok(())
    }
}

fn check_indices(v: &Value, key: &str, n: usize, targets_key: &str, n_targets: usize) -> Result<(), String> {
    let rows = items(v, key);
    let mut seen = vec![false; n];
    for row in &rows {
        let idx = row["index"].as_u64().unwrap_or(u64::MAX) as usize;
        if idx >= n {
            return Err(format!("{key}: index {idx} out of range (0..{n})"));
        }
        if std::mem::replace(&mut seen[idx], true) {
            return Err(format!("{key}: index {idx} appears twice"));
        }
        for t in row[targets_key].as_array().into_iter().flatten() {
            let t = t.as_u64().unwrap_or(u64::MAX) as usize;
            if t >= n_targets {
                return Err(format!("{key}[{idx}].{targets_key}: {t} out of range (0..{n_targets})"));
            }
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(format!("{key}: no entry for index {missing}"));
    }
    Ok(())
}

/// Greedy clustering in input order: an item joins the first cluster whose
/// representative (its earliest member) scores at least `threshold`.
pub fn cluster_by_similarity(
    texts: &[String],
    threshold: f64,
    scorer: &PairScorer,
) -> Result<Vec<Vec<usize>>, EvalError> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    'items: for (i, text) in texts.iter().enumerate() {
        for cluster in clusters.iter_mut() {
            if scorer.score(&texts[cluster[0]], text)? >= threshold {
                cluster.push(i);
                continue 'items;
            }
        }
        clusters.push(vec![i]);
    }
    Ok(clusters)
}

fn union_sources(target: &mut Vec<Source>, extra: &[Source]) {
    for s in extra {
        if !target.contains(s) {
            target.push(s.clone());
        }
    }
}

/// Collapse near-duplicate risks, keeping the earliest wording and the union
/// of sources (and so of harm flags).
pub fn merge_duplicate_risks(
    items: &[RiskItem],
    threshold: f64,
    scorer: &PairScorer,
) -> Result<Vec<RiskItem>, EvalError> {
    let texts: Vec<String> = items.iter().map(|r| r.text.clone()).collect();
    Ok(cluster_by_similarity(&texts, threshold, scorer)?
        .into_iter()
        .map(|members| {
            let mut rep = items[members[0]].clone();
            for &m in &members[1..] {
                union_sources(&mut rep.sources, &items[m].sources);
            }
            rep.sync_flag();
            rep
        })
        .collect())
}

/// Same clustering for mitigations.
pub fn merge_duplicate_mitigations(
    items: &[MitigationItem],
    threshold: f64,
    scorer: &PairScorer,
) -> Result<Vec<MitigationItem>, EvalError> {
    let texts: Vec<String> = items.iter().map(|m| m.text.clone()).collect();
    Ok(cluster_by_similarity(&texts, threshold, scorer)?
        .into_iter()
        .map(|members| {
            let mut rep = items[members[0]].clone();
            for &m in &members[1..] {
                union_sources(&mut rep.sources, &items[m].sources);
            }
            rep
        })
        .collect())
}

/// One Step-1 extraction job.
#[derive(Debug, Clone)]
pub struct SourceText {
    pub text: String,
    pub source: Source,
}

/// Risk sources of a retrieval context, interleaved by rank (card `i`'s
/// risk sections, then incident `i`) so a deeper retrieval only appends.
pub fn risk_sources(ctx: &RetrievalContext) -> Vec<SourceText> {
    let mut out = Vec::new();
    for rank in 0..ctx.card_hits.len().max(ctx.incident_hits.len()) {
        if let Some(card) = ctx.card_hits.get(rank) {
            for s in &card.risk_sections {
                out.push(SourceText {
                    text: s.text.clone(),
                    source: Source::card(&card.id, &s.kinds),
                });
            }
        }
        if let Some(inc) = ctx.incident_hits.get(rank) {
            out.push(SourceText {
                text: inc.description.clone(),
                source: Source::incident(inc.id),
            });
        }
    }
    out
}

/// Mitigation sources: risk then recommendation sections of each card hit.
pub fn mitigation_sources(ctx: &RetrievalContext) -> Vec<SourceText> {
    ctx.card_hits
        .iter()
        .flat_map(|card| {
            card.risk_sections
                .iter()
                .chain(&card.recommendation_sections)
                .map(move |s: &Section| SourceText {
                    text: s.text.clone(),
                    source: Source::card(&card.id, &s.kinds),
                })
        })
        .collect()
}

impl Generator<'_> {
    fn request(&self, task: Task, variables: BTreeMap<String, String>) -> ChatRequest {
        let (system, user) = self.prompts.get(task).render(&variables);
        ChatRequest {
            task,
            system,
            user,
            variables,
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        }
    }

    fn ask(
        &self,
        task: Task,
        vars: BTreeMap<String, String>,
        check: &dyn Fn(&Value) -> Result<(), String>,
    ) -> Result<Value, GenerationError> {
        let req = self.request(task, vars);
        Ok(chat_complete(self.chat, &req, self.config.max_repairs, check)?.parsed)
    }

    /// Step 1 for risks: structure one section (or incident description).
    pub fn extract_risk_items(
        &self,
        section_text: &str,
        source: &Source,
        model_description: &str,
    ) -> Result<Vec<RiskItem>, GenerationError> {
        if section_text.trim().is_empty() {
            return Ok(Vec::new());
        }
        let harm_types = &self.config.taxonomy.harm_types;
        let vars = BTreeMap::from([
            ("section_text".to_string(), section_text.to_string()),
            ("model_description".to_string(), model_description.to_string()),
            (
                "harm_types".to_string(),
                serde_json::to_string(harm_types).expect("strings serialize"),
            ),
        ]);
        let verb_first = check_verb_first("risks");
        let check = |v: &Value| {
            verb_first(v)?;
            for (i, item) in items(v, "risks").iter().enumerate() {
                let h = str_field(item, "harm_type");
                if !self.config.taxonomy.contains(h) {
                    return Err(format!("risks[{i}].harm_type `{h}` is not one of {harm_types:?}"));
                }
            }
            Ok(())
        };
        let reply = self.ask(Task::RiskExtraction, vars, &check)?;
        Ok(items(&reply, "risks")
            .iter()
            .map(|item| RiskItem {
                text: str_field(item, "text").to_string(),
                layer: Layer::parse(str_field(item, "layer")).unwrap_or(Layer::Capability),
                harm_type: str_field(item, "harm_type").to_string(),
                from_incident: source.origin.is_incident(),
                sources: vec![source.clone()],
            })
            .collect())
    }

    /// Step 1 for mitigations: one section at a time.
    pub fn extract_mitigation_items(
        &self,
        section_text: &str,
        source: &Source,
    ) -> Result<Vec<MitigationItem>, GenerationError> {
        if section_text.trim().is_empty() {
            return Ok(Vec::new());
        }
        let vars = BTreeMap::from([("section_text".to_string(), section_text.to_string())]);
        let reply = self.ask(Task::MitigationExtraction, vars, &check_verb_first("mitigations"))?;
        Ok(items(&reply, "mitigations")
            .iter()
            .map(|item| MitigationItem {
                text: str_field(item, "text").to_string(),
                sources: vec![source.clone()],
                applies_to: Vec::new(),
                unmapped: false,
            })
            .collect())
    }

    /// Step 1 over many sources in parallel; output keeps source order.
    pub fn extract_all_risks(
        &self,
        sources: &[SourceText],
        model_description: &str,
    ) -> Result<Vec<RiskItem>, GenerationError> {
        let parts: Vec<Vec<RiskItem>> = sources
            .par_iter()
            .map(|s| self.extract_risk_items(&s.text, &s.source, model_description))
            .collect::<Result<_, _>>()?;
        Ok(parts.into_iter().flatten().collect())
    }

    pub fn extract_all_mitigations(&self, sources: &[SourceText]) -> Result<Vec<MitigationItem>, GenerationError> {
        let parts: Vec<Vec<MitigationItem>> = sources
            .par_iter()
            .map(|s| self.extract_mitigation_items(&s.text, &s.source))
            .collect::<Result<_, _>>()?;
        Ok(parts.into_iter().flatten().collect())
    }

    /// Candidate uses ranked by likelihood; the top `n_top` are kept.
    pub fn generate_uses(&self, model_description: &str) -> Result<Vec<UseCase>, GenerationError> {
        self.config.validate()?;
        let n_top = self.config.n_top;
        if n_top == 0 {
            return Ok(Vec::new());
        }
        let vars = BTreeMap::from([
            ("model_description".to_string(), model_description.to_string()),
            ("n_candidates".to_string(), self.config.n_candidates.to_string()),
        ]);
        let check = |v: &Value| {
            let n = items(v, "uses").len();
            if n < n_top {
                return Err(format!("expected at least {n_top} uses, got {n}"));
            }
            Ok(())
        };
        let reply = self.ask(Task::UseGeneration, vars, &check)?;
        let mut uses = items(&reply, "uses");
        // Stable: equally likely uses keep the generator's order.
        uses.sort_by(|a, b| {
            b["likelihood"]
                .as_f64()
                .unwrap_or(0.0)
                .total_cmp(&a["likelihood"].as_f64().unwrap_or(0.0))
        });
        Ok(uses
            .iter()
            .take(n_top)
            .enumerate()
            .map(|(rank, u)| UseCase {
                domain: str_field(u, "domain").to_string(),
                purpose: str_field(u, "purpose").to_string(),
                capability: str_field(u, "capability").to_string(),
                ai_deployer: str_field(u, "ai_deployer").to_string(),
                ai_subject: str_field(u, "ai_subject").to_string(),
                likelihood_rank: rank as u32 + 1,
            })
            .collect())
    }

    /// Step 2: adapt or drop each risk for the target model and map it to
    /// the uses it concerns.
    pub fn adapt_and_map_risks(
        &self,
        items_in: &[RiskItem],
        uses: &[UseCase],
        model_description: &str,
    ) -> Result<MappedRisks, GenerationError> {
        if items_in.is_empty() {
            return Ok(MappedRisks {
                risks: Vec::new(),
                mapping: Vec::new(),
                dropped: Vec::new(),
            });
        }
        let risk_texts: Vec<String> = items_in.iter().map(|r| r.text.clone()).collect();
        let use_refs: Vec<Value> = uses
            .iter()
            .map(|u| json!({"domain": u.domain, "purpose": u.purpose, "ai_subject": u.ai_subject}))
            .collect();
        let vars = BTreeMap::from([
            ("model_description".to_string(), model_description.to_string()),
            (
                "risks".to_string(),
                serde_json::to_string(&risk_texts).expect("strings serialize"),
            ),
            ("uses".to_string(), Value::Array(use_refs).to_string()),
            ("risks_block".to_string(), numbered(risk_texts.iter().cloned())),
            ("uses_block".to_string(), numbered(uses.iter().map(UseCase::summary))),
        ]);
        let (n, n_uses) = (items_in.len(), uses.len());
        let check = |v: &Value| {
            check_indices(v, "risks", n, "uses", n_uses)?;
            for row in items(v, "risks") {
                let action = str_field(&row, "action");
                let text = str_field(&row, "text");
                if action == "adapt" && text.split_whitespace().nth(1).is_none() {
                    return Err("adapted risks need a rewritten `text`".into());
                }
                if action == "adapt" && !text.starts_with(|c: char| c.is_ascii_lowercase()) {
                    return Err("adapted text must start with a lowercase verb".into());
                }
            }
            Ok(())
        };
        let reply = self.ask(Task::RiskMapping, vars, &check)?;
        let mut decisions: Vec<RiskDecision> = items(&reply, "risks")
            .into_iter()
            .map(|row| serde_json::from_value(row).map_err(|e| ProviderError::InvalidResponse(e.to_string())))
            .collect::<Result<_, _>>()?;
        decisions.sort_by_key(|d| d.index);

        let mut mapped = MappedRisks {
            risks: Vec::new(),
            mapping: Vec::new(),
            dropped: Vec::new(),
        };
        for d in decisions {
            let original = &items_in[d.index];
            if d.action == "drop" {
                mapped.dropped.push(DroppedRisk {
                    text: original.text.clone(),
                    reason: d.reason.unwrap_or_else(|| "not applicable to the target model".into()),
                });
                continue;
            }
            let mut risk = original.clone();
            if d.action == "adapt" {
                if let Some(t) = d.text {
                    risk.text = t;
                }
            }
            let mut row = vec![false; n_uses];
            for u in d.uses {
                row[u] = true;
            }
            mapped.risks.push(risk);
            mapped.mapping.push(row);
        }
        Ok(mapped)
    }

    /// Link each mitigation to the risks it addresses; unlinked ones are
    /// kept and flagged.
    pub fn map_mitigations(
        &self,
        mitigations: &[MitigationItem],
        risks: &[RiskItem],
    ) -> Result<Vec<MitigationItem>, GenerationError> {
        if mitigations.is_empty() {
            return Ok(Vec::new());
        }
        if risks.is_empty() {
            return Ok(mitigations
                .iter()
                .cloned()
                .map(|mut m| {
                    m.applies_to.clear();
                    m.unmapped = true;
                    m
                })
                .collect());
        }
        let m_texts: Vec<String> = mitigations.iter().map(|m| m.text.clone()).collect();
        let r_texts: Vec<String> = risks.iter().map(|r| r.text.clone()).collect();
        let vars = BTreeMap::from([
            (
                "mitigations".to_string(),
                serde_json::to_string(&m_texts).expect("strings serialize"),
            ),
            (
                "risks".to_string(),
                serde_json::to_string(&r_texts).expect("strings serialize"),
            ),
            ("mitigations_block".to_string(), numbered(m_texts.iter().cloned())),
            ("risks_block".to_string(), numbered(r_texts.iter().cloned())),
        ]);
        let (n, n_risks) = (mitigations.len(), risks.len());
        let check = |v: &Value| check_indices(v, "mitigations", n, "risks", n_risks);
        let reply = self.ask(Task::MitigationMapping, vars, &check)?;
        let mut out = mitigations.to_vec();
        for row in items(&reply, "mitigations") {
            let idx = row["index"].as_u64().unwrap_or_default() as usize;
            let mut targets: Vec<usize> = row["risks"]
                .as_array()
                .into_iter()
                .flatten()
                .filter_map(|t| t.as_u64().map(|t| t as usize))
                .collect();
            targets.sort_unstable();
            targets.dedup();
            out[idx].unmapped = targets.is_empty();
            out[idx].applies_to = targets;
        }
        Ok(out)
    }

    /// Full generation for one model from its retrieval context.
    pub fn generate(
        &self,
        ctx: &RetrievalContext,
        model_description: &str,
    ) -> Result<GenerationOutput, GenerationError> {
        self.config.validate()?;
        let (raw_risks, raw_mitigations) = rayon::join(
            || self.extract_all_risks(&risk_sources(ctx), model_description),
            || self.extract_all_mitigations(&mitigation_sources(ctx)),
        );
        let threshold = self.config.merge_threshold;
        let risks = merge_duplicate_risks(&raw_risks?, threshold, self.scorer)?;
        let mitigations = merge_duplicate_mitigations(&raw_mitigations?, threshold, self.scorer)?;
        let uses = self.generate_uses(model_description)?;
        let mapped = if uses.is_empty() {
            let n = risks.len();
            MappedRisks {
                risks,
                mapping: vec![Vec::new(); n],
                dropped: Vec::new(),
            }
        } else {
            self.adapt_and_map_risks(&risks, &uses, model_description)?
        };
        let mitigations = self.map_mitigations(&mitigations, &mapped.risks)?;
        Ok(GenerationOutput {
            uses,
            mapped,
            mitigations,
        })
    }
}
