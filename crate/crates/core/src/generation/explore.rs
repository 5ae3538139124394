//! Domain table and capability profiles behind offline use generation.
//!
//! The table lists 46 application domains, each with lexical cues (used
//! both to score a domain against a model description and to decide which
//! risks concern a use) and a default purpose, deployer and subject.

use crate::text::tokenize;

/// What a model consumes or emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modality {
    Text,
    Image,
    Audio,
    Video,
    /// Classification labels, scores, embeddings: non-generative output.
    Label,
}

impl Modality {
    pub fn noun(self) -> &'static str {
        match self {
            Modality::Text => "text",
            Modality::Image => "images",
            Modality::Audio => "audio",
            Modality::Video => "video",
            Modality::Label => "labels",
        }
    }
}

/// Nouns that name a modality in risk text.
pub(crate) const MODALITY_NOUNS: &[(&str, Modality)] = &[
    ("answer", Modality::Text),
    ("article", Modality::Text),
    ("artwork", Modality::Image),
    ("audio", Modality::Audio),
    ("caption", Modality::Text),
    ("chatbot", Modality::Text),
    ("code", Modality::Text),
    ("conversation", Modality::Text),
    ("deepfake", Modality::Image),
    ("dialogue", Modality::Text),
    ("drawing", Modality::Image),
    ("essay", Modality::Text),
    ("footage", Modality::Video),
    ("illustration", Modality::Image),
    ("image", Modality::Image),
    ("label", Modality::Label),
    ("message", Modality::Text),
    ("music", Modality::Audio),
    ("painting", Modality::Image),
    ("photo", Modality::Image),
    ("photograph", Modality::Image),
    ("picture", Modality::Image),
    ("recording", Modality::Audio),
    ("response", Modality::Text),
    ("review", Modality::Text),
    ("sentence", Modality::Text),
    ("song", Modality::Audio),
    ("speech", Modality::Audio),
    ("story", Modality::Text),
    ("summary", Modality::Text),
    ("text", Modality::Text),
    ("transcript", Modality::Text),
    ("translation", Modality::Text),
    ("video", Modality::Video),
    ("visual", Modality::Image),
    ("voice", Modality::Audio),
];

pub(crate) fn modality_of(token: &str) -> Option<Modality> {
    let folded = crate::text::fold_plural(token);
    MODALITY_NOUNS
        .iter()
        .find(|(noun, _)| *noun == token || *noun == folded)
        .map(|&(_, m)| m)
}

/// A recognised model capability with its modalities and the domains it
/// is most often deployed in (most likely first).
#[derive(Debug)]
pub struct CapabilityProfile {
    pub name: &'static str,
    cues: &'static [&'static str],
    pub inputs: &'static [Modality],
    pub outputs: &'static [Modality],
    pub domains: &'static [&'static str],
}

use Modality::*;

/// Checked in order; the first profile with a cue in the description wins.
pub const PROFILES: &[CapabilityProfile] = &[
    CapabilityProfile {
        name: "image editing",
        cues: &[
            "image-to-image",
            "image to image",
            "img2img",
            "inpainting",
            "pix2pix",
            "photo editing",
        ],
        inputs: &[Image, Text],
        outputs: &[Image],
        domains: &[
            "Social media",
            "Advertising and marketing",
            "Art and design",
            "E-commerce and retail",
            "Journalism and news",
        ],
    },
    CapabilityProfile {
        name: "image generation",
        cues: &[
            "text-to-image",
            "text to image",
            "txt2img",
            "text2img",
            "stable diffusion",
            "stable-diffusion",
            "diffusion model",
            "sdxl",
            "dreambooth",
            "image generation",
            "generates images",
            "generate images",
            "image generator",
        ],
        inputs: &[Text],
        outputs: &[Image],
        domains: &[
            "Art and design",
            "Advertising and marketing",
            "Entertainment and media",
            "Gaming",
            "Publishing and writing",
            "Fashion and beauty",
            "Social media",
            "Education",
        ],
    },
    CapabilityProfile {
        name: "image captioning",
        cues: &[
            "image-to-text",
            "image to text",
            "captioning",
            "image captions",
            "visual question answering",
            "vqa",
        ],
        inputs: &[Image],
        outputs: &[Text],
        domains: &[
            "Accessibility",
            "E-commerce and retail",
            "Social media",
            "Journalism and news",
            "Healthcare",
        ],
    },
    CapabilityProfile {
        name: "speech recognition",
        cues: &[
            "speech recognition",
            "speech-to-text",
            "speech to text",
            "asr",
            "transcription",
            "transcribe",
        ],
        inputs: &[Audio],
        outputs: &[Text],
        domains: &[
            "Customer service",
            "Healthcare",
            "Accessibility",
            "Legal services",
            "Education",
        ],
    },
    CapabilityProfile {
        name: "speech synthesis",
        cues: &[
            "text-to-speech",
            "text to speech",
            "tts",
            "speech synthesis",
            "voice cloning",
        ],
        inputs: &[Text],
        outputs: &[Audio],
        domains: &[
            "Accessibility",
            "Customer service",
            "Entertainment and media",
            "Education",
            "Music and audio",
        ],
    },
    CapabilityProfile {
        name: "image classification",
        cues: &[
            "image classification",
            "classify images",
            "object detection",
            "vision transformer",
            "image classifier",
        ],
        inputs: &[Image],
        outputs: &[Label],
        domains: &[
            "Healthcare",
            "Manufacturing",
            "Agriculture",
            "Security and defense",
            "E-commerce and retail",
        ],
    },
    CapabilityProfile {
        name: "machine translation",
        cues: &["machine translation", "translation model", "translates", "translate"],
        inputs: &[Text],
        outputs: &[Text],
        domains: &[
            "Translation and localization",
            "Customer service",
            "Travel and hospitality",
            "Healthcare",
            "Government and public services",
        ],
    },
    CapabilityProfile {
        name: "sentiment analysis",
        cues: &["sentiment"],
        inputs: &[Text],
        outputs: &[Label],
        domains: &[
            "E-commerce and retail",
            "Customer service",
            "Social media",
            "Travel and hospitality",
            "Finance and banking",
            "Advertising and marketing",
        ],
    },
    CapabilityProfile {
        name: "text classification",
        cues: &[
            "text classification",
            "classifier",
            "classification",
            "classify",
            "toxicity detection",
            "hate speech detection",
            "natural language inference",
        ],
        inputs: &[Text],
        outputs: &[Label],
        domains: &[
            "Content moderation",
            "Customer service",
            "Employment and recruitment",
            "Finance and banking",
            "Legal services",
        ],
    },
    CapabilityProfile {
        name: "text summarization",
        cues: &["summariz", "summaris"],
        inputs: &[Text],
        outputs: &[Text],
        domains: &[
            "Journalism and news",
            "Legal services",
            "Healthcare",
            "Scientific research",
            "Personal productivity",
        ],
    },
    CapabilityProfile {
        name: "question answering",
        cues: &["question answering", "question-answering", "extractive qa"],
        inputs: &[Text],
        outputs: &[Text],
        domains: &[
            "Customer service",
            "Education",
            "Healthcare",
            "Legal services",
            "Scientific research",
        ],
    },
    CapabilityProfile {
        name: "named entity recognition",
        cues: &["named entity", "token classification"],
        inputs: &[Text],
        outputs: &[Label],
        domains: &[
            "Healthcare",
            "Legal services",
            "Finance and banking",
            "Journalism and news",
            "Scientific research",
        ],
    },
    CapabilityProfile {
        name: "sentence embedding",
        cues: &[
            "sentence embedding",
            "sentence-transformers",
            "semantic search",
            "sentence similarity",
            "embeddings",
        ],
        inputs: &[Text],
        outputs: &[Label],
        domains: &[
            "E-commerce and retail",
            "Scientific research",
            "Customer service",
            "Legal services",
            "Employment and recruitment",
        ],
    },
    CapabilityProfile {
        name: "text generation",
        cues: &[
            "text generation",
            "text-generation",
            "language model",
            "llm",
            "chat",
            "chatbot",
            "instruction",
            "causal",
            "gpt",
            "generative",
            "generates text",
            "generate text",
        ],
        inputs: &[Text],
        outputs: &[Text],
        domains: &[
            "Customer service",
            "Education",
            "Content moderation",
            "Employment and recruitment",
            "Journalism and news",
            "Software development",
            "Advertising and marketing",
            "Personal productivity",
            "Healthcare",
            "Legal services",
        ],
    },
];

/// Used when no profile matches the description.
pub const FALLBACK_PROFILE: CapabilityProfile = CapabilityProfile {
    name: "language processing",
    cues: &[],
    inputs: &[],
    outputs: &[],
    domains: &[
        "Education",
        "Customer service",
        "Healthcare",
        "Scientific research",
        "Software development",
    ],
};

/// The capability profile matching `description`; `None` when nothing
/// matches (the model type is then unknown and no modality rule applies).
pub fn detect_capability(description: &str) -> Option<&'static CapabilityProfile> {
    let lower = description.to_lowercase();
    let tokens = tokenize(&lower);
    PROFILES.iter().find(|p| {
        p.cues.iter().any(|cue| {
            if cue.len() <= 4 && !cue.contains(' ') {
                tokens.iter().any(|t| t == cue)
            } else {
                lower.contains(cue)
            }
        })
    })
}

/// One application domain.
#[derive(Debug)]
pub struct Domain {
    pub name: &'static str,
    pub cues: &'static [&'static str],
    pub text_purpose: &'static str,
    pub image_purpose: &'static str,
    pub deployer: &'static str,
    pub subject: &'static str,
}

macro_rules! domains {
    ($( $name:literal [$($cue:literal),*] $text:literal, $image:literal, $deployer:literal, $subject:literal; )*) => {
        pub const DOMAINS: &[Domain] = &[
            $( Domain { name: $name, cues: &[$($cue),*], text_purpose: $text, image_purpose: $image, deployer: $deployer, subject: $subject }, )*
        ];
    };
}

domains! {
    "Healthcare" ["health", "medical", "clinical", "patient", "diagnos", "hospital", "doctor"]
        "summarizing clinical notes", "illustrating patient education materials", "hospital", "patients";
    "Education" ["education", "student", "school", "teach", "tutor", "homework", "exam", "classroom"]
        "providing personalized tutoring", "creating illustrated learning materials", "online learning platform", "students";
    "Employment and recruitment" ["job", "recruit", "hiring", "hire", "candidate", "applicant", "resume", "employment", "career"]
        "enhancing job matching", "creating recruitment campaign visuals", "recruitment agency", "job seekers";
    "Content moderation" ["moderat", "harmful", "inappropriate", "toxic", "abusive", "offensive", "hate"]
        "detecting harmful content", "screening uploaded images for abuse", "social media platform", "platform users";
    "Customer service" ["customer", "complaint", "helpdesk", "service desk", "support ticket"]
        "answering customer support queries", "illustrating product support guides", "retail company", "customers";
    "Finance and banking" ["financ", "bank", "loan", "credit", "investment", "investor", "fraud", "payment"]
        "drafting financial reports", "producing graphics for banking products", "bank", "account holders";
    "Insurance" ["insur", "underwrit", "policyholder"]
        "processing insurance claims", "visualizing claim damage reports", "insurance company", "policyholders";
    "Legal services" ["legal", "law", "laws", "lawyer", "court", "contract", "litigation", "jurisdiction"]
        "drafting legal documents", "visualizing case evidence", "law firm", "clients";
    "Journalism and news" ["news", "journalis", "headline", "reporter", "press$"]
        "drafting news articles", "illustrating news stories", "news organization", "readers";
    "Advertising and marketing" ["advertis", "marketing", "brand", "promotional", "ad copy"]
        "writing ad copy", "creating advertising visuals", "marketing agency", "consumers";
    "Entertainment and media" ["entertain", "film", "movie", "anime", "cartoon", "character", "fan", "fiction"]
        "writing scripts and stories", "designing characters for animation", "media studio", "audiences";
    "Gaming" ["game", "games", "gaming", "player", "npc"]
        "generating dialogue for game characters", "creating game assets", "game studio", "players";
    "Art and design" ["artist", "artwork", "artistic", "designer", "graphic design", "illustrat", "paint", "creative", "style"]
        "brainstorming creative concepts", "producing stylized artwork", "design agency", "artists and clients";
    "Social media" ["social media", "post", "influencer", "follower", "hashtag"]
        "drafting social media posts", "creating images for social media posts", "social media platform", "followers";
    "E-commerce and retail" ["retail", "shop", "product$", "e-commerce", "ecommerce", "review", "purchase", "seller"]
        "writing product descriptions", "generating product photos", "online retailer", "shoppers";
    "Travel and hospitality" ["travel", "hotel", "touris", "camping", "campsite", "booking", "hospitality", "trip"]
        "summarizing guest reviews", "creating destination imagery", "travel agency", "travelers";
    "Government and public services" ["government", "public sector", "citizen", "municipal", "public service", "welfare"]
        "answering citizen inquiries", "illustrating public information campaigns", "government agency", "citizens";
    "Law enforcement" ["police", "law enforcement", "crime", "criminal", "surveillance", "suspect"]
        "analyzing incident reports", "generating composite sketches", "police department", "suspects and the public";
    "Security and defense" ["defense", "military", "cyber", "security", "threat", "weapon"]
        "analyzing threat intelligence", "simulating reconnaissance imagery", "security firm", "organizations";
    "Software development" ["code", "software", "programming", "developer", "bug"]
        "generating code", "creating UI mockups", "software company", "developers";
    "Scientific research" ["research", "scientific", "scientist", "experiment", "academic"]
        "summarizing scientific literature", "visualizing research concepts", "research institute", "researchers";
    "Agriculture" ["agricult", "farm", "crop", "livestock", "harvest"]
        "advising farmers on crop management", "visualizing crop health", "agritech company", "farmers";
    "Energy and utilities" ["energy", "utility", "electricity", "power grid"]
        "drafting energy usage reports", "visualizing infrastructure plans", "utility company", "households";
    "Transportation and logistics" ["transport", "logistic", "shipping", "delivery", "vehicle", "traffic", "fleet"]
        "optimizing delivery communications", "visualizing route plans", "logistics company", "drivers and recipients";
    "Automotive" ["automotive", "car", "driver", "autonomous driving"]
        "powering in-car voice assistants", "designing vehicle concepts", "car manufacturer", "drivers";
    "Real estate" ["real estate", "property", "housing", "tenant", "rental", "mortgage"]
        "writing property listings", "staging property images", "real estate agency", "tenants and buyers";
    "Telecommunications" ["telecom", "mobile network", "carrier", "call center"]
        "summarizing support calls", "designing network coverage maps", "telecom provider", "subscribers";
    "Manufacturing" ["manufactur", "factory", "industrial", "assembly line", "quality control"]
        "drafting maintenance reports", "visualizing product prototypes", "manufacturer", "factory workers";
    "Human resources" ["employee", "workplace", "hr", "performance review", "payroll", "staff"]
        "summarizing employee feedback", "creating onboarding visuals", "HR department", "employees";
    "Mental health and wellbeing" ["mental health", "therap", "wellbeing", "counsel", "emotional", "loneliness"]
        "offering supportive conversation", "creating calming visual content", "wellness app", "users seeking support";
    "Accessibility" ["accessib", "disabilit", "blind", "visually impaired", "deaf", "screen reader", "alt text"]
        "describing content for visually impaired users", "generating visual aids", "assistive technology provider", "people with disabilities";
    "Translation and localization" ["translat", "locali", "multilingual", "dialect", "languages"]
        "localizing content for new markets", "adapting visuals for local markets", "localization vendor", "international customers";
    "Religion and culture" ["religio", "cultural heritage", "church", "faith$", "ritual"]
        "explaining religious texts", "illustrating cultural traditions", "cultural institution", "community members";
    "Politics and elections" ["politic", "election", "voter", "democra", "propaganda"]
        "drafting political campaign messages", "creating campaign posters", "political campaign", "voters";
    "Environment and sustainability" ["environment", "climate", "sustainab", "carbon", "emission"]
        "summarizing sustainability reports", "visualizing climate scenarios", "environmental NGO", "communities";
    "Nonprofit and humanitarian" ["nonprofit", "charity", "humanitarian", "refugee", "donor"]
        "drafting fundraising appeals", "creating awareness campaign imagery", "nonprofit organization", "beneficiaries";
    "Childcare and parenting" ["child", "kid", "minors", "toddler", "parent"]
        "generating bedtime stories", "illustrating children's books", "parenting app", "children and parents";
    "Dating and relationships" ["dating", "romantic", "relationship", "companion"]
        "suggesting conversation starters", "creating profile pictures", "dating app", "app users";
    "Music and audio" ["music", "song", "podcast", "lyric"]
        "writing song lyrics", "creating album artwork", "music label", "listeners";
    "Sports and fitness" ["sport", "fitness", "athlete", "workout", "coach"]
        "creating personalized workout plans", "generating sports graphics", "fitness app", "athletes";
    "Food and nutrition" ["food", "nutrition", "recipe", "diet", "restaurant"]
        "recommending recipes", "generating food photography", "meal planning app", "home cooks";
    "Fashion and beauty" ["fashion", "clothing", "apparel", "beauty", "cosmetic", "outfit"]
        "writing fashion product copy", "designing clothing concepts", "fashion retailer", "shoppers";
    "Architecture and construction" ["architect", "construction", "building", "interior"]
        "drafting building specifications", "visualizing building designs", "architecture firm", "clients";
    "Pharmaceuticals" ["pharma", "drug", "clinical trial", "molecule", "medication"]
        "summarizing drug safety reports", "visualizing molecular structures", "pharmaceutical company", "trial participants";
    "Publishing and writing" ["publish", "book$", "author$", "writer", "novelist", "editor"]
        "assisting authors with drafting", "designing book covers", "publishing house", "authors and readers";
    "Personal productivity" ["productivity", "email", "schedule", "assistant", "note-taking"]
        "drafting emails", "creating presentation graphics", "productivity software vendor", "office workers";
}

pub fn domain(name: &str) -> Option<&'static Domain> {
    DOMAINS.iter().find(|d| d.name.eq_ignore_ascii_case(name))
}

/// True when `cue` occurs in the text. Multi-word cues are matched as
/// substrings of the lowercased text; short cues must equal a token; longer
/// cues match token prefixes (`recruit` matches `recruitment`).
/// A trailing `$` forces whole-token matching for longer cues too. Whole-token
/// matches accept a plural `s`.
pub(crate) fn cue_matches(cue: &str, lower_text: &str, tokens: &[String]) -> bool {
    let whole = |c: &str| {
        tokens
            .iter()
            .any(|t| t == c || (t.len() == c.len() + 1 && t.starts_with(c) && t.ends_with('s')))
    };
    if cue.contains(' ') || cue.contains('-') {
        lower_text.contains(cue)
    } else if let Some(stem) = cue.strip_suffix('$') {
        whole(stem)
    } else if cue.len() <= 4 {
        whole(cue)
    } else {
        tokens.iter().any(|t| t.starts_with(cue))
    }
}

pub(crate) fn domain_hits(domain: &Domain, lower_text: &str, tokens: &[String]) -> usize {
    domain
        .cues
        .iter()
        .filter(|c| cue_matches(c, lower_text, tokens))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_has_46_distinct_domains() {
        assert_eq!(DOMAINS.len(), 46);
        let mut names: Vec<_> = DOMAINS.iter().map(|d| d.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 46);
        for d in DOMAINS {
            assert!(!d.cues.is_empty(), "{}", d.name);
            assert!(d.cues.iter().all(|c| c.chars().all(|ch| !ch.is_uppercase())));
            assert!(!d.text_purpose.is_empty() && !d.image_purpose.is_empty());
        }
    }

    #[test]
    fn profile_domains_exist_in_table() {
        for p in PROFILES.iter().chain([&FALLBACK_PROFILE]) {
            for d in p.domains {
                assert!(domain(d).is_some(), "{}: {d}", p.name);
            }
        }
    }

    #[test]
    fn capability_detection() {
        let cap = |s: &str| detect_capability(s).map(|p| p.name);
        assert_eq!(
            cap("A LoRA for Stable Diffusion that draws anime characters"),
            Some("image generation")
        );
        assert_eq!(
            cap("XLM-RoBERTa fine-tuned for sentiment of camping reviews"),
            Some("sentiment analysis")
        );
        assert_eq!(cap("An image-to-text captioning model"), Some("image captioning"));
        assert_eq!(cap("GPT-2 fine-tuned for text generation"), Some("text generation"));
        assert_eq!(cap("a tabular regression thing"), None);
    }

    #[test]
    fn short_cues_match_whole_tokens_only() {
        let text = "articles about careers";
        let tokens = tokenize(text);
        assert!(!cue_matches("car", text, &tokens));
        assert!(cue_matches("career", text, &tokens));
        assert!(!cue_matches("art", text, &tokens));
        assert!(!cue_matches("author$", "authorities", &tokenize("authorities")));
        assert!(cue_matches("book$", "books", &tokenize("books")));
        assert!(cue_matches("job", "jobs", &tokenize("jobs")));
    }
}
