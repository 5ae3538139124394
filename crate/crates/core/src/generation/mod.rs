//! Two-step generator: structure retrieved text into risks and mitigations,
//! generate example uses, then adapt and map everything to the target model.

pub mod explore;
mod lexicon;
mod pipeline;
mod prompts;
pub mod rules;
mod types;

pub use lexicon::is_lexicon_verb;
pub use pipeline::*;
pub use prompts::{PromptSet, PromptTemplate};
pub use types::*;
