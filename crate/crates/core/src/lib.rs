//! Building blocks for an entity-level code-switched (EntityCS) corpus.
//!
//! The pipeline runs in four stages, each usable on its own:
//!
//! 1. [`extract`] turns wikilink-annotated article text into filtered,
//!    sentence-segmented [`extract::SourceSentence`] records.
//! 2. [`kb`] maps English page titles to knowledge-base identifiers and their
//!    labels in the target languages.
//! 3. [`generate`] switches every linked entity of a sentence into one target
//!    language at a time and wraps entities in `<e>`/`</e>` indicators.
//! 4. [`masking`] converts the resulting instances into masked training
//!    examples under MLM, whole-entity and partial-entity strategies.
//!
//! [`sampling`] provides the smoothed per-language sampling distribution and
//! the per-language validation split used when batching the corpus.

pub mod extract;
pub mod generate;
pub mod kb;
pub mod masking;
pub mod sampling;
pub mod seed;

pub use extract::{Extractor, RawDocument, SourceSentence, WikiLink};
pub use generate::{CsInstance, EmitEnglish, GenerationConfig, Generator};
pub use kb::{EntityIndex, EntityRecord, Qid};
pub use masking::{MaskedExample, MaskingConfig, Strategy, SubwordSequence};
pub use sampling::LangWeights;

/// Opening entity indicator token.
pub const ENTITY_OPEN: &str = "<e>";
/// Closing entity indicator token.
pub const ENTITY_CLOSE: &str = "</e>";
/// Matrix language of every source sentence.
pub const ENGLISH: &str = "en";
