use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::SectionKind;

/// Where in the sociotechnical stack a risk materializes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Capability,
    HumanInteraction,
    Systemic,
}

impl Layer {
    pub const ALL: [Layer; 3] = [Layer::Capability, Layer::HumanInteraction, Layer::Systemic];

    pub fn as_str(self) -> &'static str {
        match self {
            Layer::Capability => "capability",
            Layer::HumanInteraction => "human_interaction",
            Layer::Systemic => "systemic",
        }
    }

    pub fn parse(s: &str) -> Option<Layer> {
        Layer::ALL.into_iter().find(|l| l.as_str() == s)
    }

    pub fn label(self) -> &'static str {
        match self {
            Layer::Capability => "Capability",
            Layer::HumanInteraction => "Human interaction",
            Layer::Systemic => "Systemic",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The document a generated item was derived from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Card(String),
    Incident(u64),
}

impl Origin {
    pub fn is_incident(&self) -> bool {
        matches!(self, Origin::Incident(_))
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Card(id) => write!(f, "{id}"),
            Origin::Incident(id) => write!(f, "incident #{id}"),
        }
    }
}

/// Provenance of one item: the origin document and, for cards, the kinds of
/// the section the text came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Source {
    pub origin: Origin,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kinds: Vec<SectionKind>,
}

impl Source {
    pub fn card(id: impl Into<String>, kinds: &[SectionKind]) -> Self {
        Self {
            origin: Origin::Card(id.into()),
            kinds: kinds.to_vec(),
        }
    }

    pub fn incident(id: u64) -> Self {
        Self {
            origin: Origin::Incident(id),
            kinds: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskItem {
    pub text: String,
    pub layer: Layer,
    pub harm_type: String,
    /// Real-world harm marker: set iff some source is an incident.
    pub from_incident: bool,
    pub sources: Vec<Source>,
}

impl RiskItem {
    /// Recompute `from_incident` from the sources.
    pub(crate) fn sync_flag(&mut self) {
        self.from_incident = self.sources.iter().any(|s| s.origin.is_incident());
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MitigationItem {
    pub text: String,
    pub sources: Vec<Source>,
    /// Indices into the report's risk list.
    pub applies_to: Vec<usize>,
    /// True when the mitigation addresses none of the risks.
    #[serde(default)]
    pub unmapped: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UseCase {
    pub domain: String,
    pub purpose: String,
    pub capability: String,
    pub ai_deployer: String,
    pub ai_subject: String,
    pub likelihood_rank: u32,
}

impl UseCase {
    /// One-line rendering in the five-component format.
    pub fn summary(&self) -> String {
        format!(
            "{}: {} by {} for {}, using {} ({})",
            self.domain, self.purpose, self.ai_deployer, self.ai_subject, self.capability, self.likelihood_rank
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedRisk {
    pub text: String,
    pub reason: String,
}

/// Risks after adaptation to the target model, with their use mapping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappedRisks {
    pub risks: Vec<RiskItem>,
    /// `mapping[i][j]`: risk `i` applies to use `j`.
    pub mapping: Vec<Vec<bool>>,
    pub dropped: Vec<DroppedRisk>,
}

/// Closed list of harm types the generator may assign.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Taxonomy {
    pub harm_types: Vec<String>,
}

pub const DEFAULT_HARM_TYPES: [&str; 6] = [
    "representation_and_toxicity",
    "misinformation",
    "malicious_use",
    "information_and_safety",
    "human_autonomy",
    "socioeconomic_and_environmental",
];

impl Default for Taxonomy {
    fn default() -> Self {
        Self {
            harm_types: DEFAULT_HARM_TYPES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Taxonomy {
    pub fn contains(&self, harm_type: &str) -> bool {
        self.harm_types.iter().any(|h| h == harm_type)
    }
}

/// Human-readable form of a snake_case harm type.
pub fn harm_label(harm_type: &str) -> String {
    let spaced = harm_type.replace("_and_", " & ").replace('_', " ");
    let mut chars = spaced.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}
