//! Entity-level code-switching of source sentences.
//!
//! For every sentence the candidate languages are those in which all of its
//! linked entities have a label. Each chosen language yields one instance
//! where every entity's display words are replaced by that language's label.
//! Entities are wrapped in `<e>` ... `</e>` in every instance, including the
//! English one.

mod stats;

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::{tokenize_words, SourceSentence};
use crate::kb::{EntityIndex, EntityRecord, IndexError, LangId, LangSet};
use crate::seed::record_rng;
use crate::{ENGLISH, ENTITY_CLOSE, ENTITY_OPEN};
pub use stats::{LanguageCounts, StatsAccumulator, StatsReport};

pub const DEFAULT_MAX_CS: usize = 5;

/// Whether the English sentence itself is emitted alongside its switched
/// versions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmitEnglish {
    /// Every source sentence also yields an English instance.
    #[default]
    Always,
    /// Only sentences without any switched instance yield an English one.
    FallbackOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub max_cs_per_sentence: usize,
    pub rng_seed: u64,
    /// Restricts switching to these languages; `None` uses every language of
    /// the index.
    pub target_languages: Option<BTreeSet<String>>,
    pub emit_english: EmitEnglish,
}

impl GenerationConfig {
    pub fn new(rng_seed: u64) -> Self {
        Self {
            max_cs_per_sentence: DEFAULT_MAX_CS,
            rng_seed,
            target_languages: None,
            emit_english: EmitEnglish::Always,
        }
    }
}

/// An entity inside an instance: a half-open token span exclusive of the
/// indicators around it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    /// `None` when the English link target is not in the index.
    pub qid: Option<String>,
}

/// One code-switched (or English) sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsInstance {
    pub instance_id: String,
    pub source_sentence_id: String,
    pub language: String,
    pub tokens: Vec<String>,
    pub entity_spans: Vec<EntitySpan>,
}

impl CsInstance {
    /// Number of tokens that are not entity indicators.
    pub fn word_count(&self) -> usize {
        self.tokens.len() - 2 * self.entity_spans.len()
    }
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("sentence {sentence_id}: entity {qid} has no {language} label although the language was a candidate")]
    MissingLabel {
        sentence_id: String,
        qid: String,
        language: String,
    },
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// Draws `k` languages uniformly without replacement: a Fisher-Yates shuffle
/// of `candidates` (in increasing id order) stopped after `k` swaps. The
/// result is returned sorted.
pub fn select_languages<R: Rng + ?Sized>(candidates: &[LangId], k: usize, rng: &mut R) -> Vec<LangId> {
    let mut pool = candidates.to_vec();
    let k = k.min(pool.len());
    for i in 0..k {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool.sort_unstable();
    pool
}

/// Generation bound to one index. Cheap to share across threads.
pub struct Generator<'a> {
    index: &'a EntityIndex,
    config: GenerationConfig,
    allowed: LangSet,
}

impl<'a> Generator<'a> {
    pub fn new(index: &'a EntityIndex, config: GenerationConfig) -> Result<Self, GenerateError> {
        let allowed = match &config.target_languages {
            Some(codes) => index.languages().set_of(codes)?,
            None => index.languages().all(),
        };
        Ok(Self { index, config, allowed })
    }

    pub fn config(&self) -> &GenerationConfig {
        &self.config
    }

    /// Languages every entity of the sentence can be switched into.
    pub fn candidate_languages(&self, sentence: &SourceSentence) -> LangSet {
        self.index
            .languages_covering(sentence.wikilinks.iter().map(|l| l.target_title.as_str()))
            .intersect(self.allowed)
    }

    /// The languages that [`Self::generate`] will switch `sentence` into.
    pub fn chosen_languages(&self, sentence: &SourceSentence) -> Vec<LangId> {
        let candidates: Vec<LangId> = self.candidate_languages(sentence).iter().collect();
        let max = self.config.max_cs_per_sentence;
        if candidates.len() <= max {
            return candidates;
        }
        let mut rng = record_rng(self.config.rng_seed, &sentence.sentence_id);
        select_languages(&candidates, max, &mut rng)
    }

    pub fn generate(&self, sentence: &SourceSentence) -> Result<Vec<CsInstance>, GenerateError> {
        let records: Vec<Option<&EntityRecord>> = sentence
            .wikilinks
            .iter()
            .map(|l| self.index.lookup(&l.target_title))
            .collect();
        let chosen = self.chosen_languages(sentence);

        let mut out = Vec::with_capacity(chosen.len() + 1);
        if chosen.is_empty() || self.config.emit_english == EmitEnglish::Always {
            out.push(build_instance(sentence, &records, ENGLISH, |k| {
                let link = &sentence.wikilinks[k];
                Ok(sentence.words[link.start..link.end].to_vec())
            })?);
        }
        for lang in chosen {
            let code = self.index.languages().code(lang);
            out.push(build_instance(sentence, &records, code, |k| {
                let rec = records[k].expect("candidate languages imply every entity resolved");
                let label = rec.label(lang).ok_or_else(|| GenerateError::MissingLabel {
                    sentence_id: sentence.sentence_id.clone(),
                    qid: rec.qid().to_string(),
                    language: code.to_owned(),
                })?;
                Ok(tokenize_words(label))
            })?);
        }
        Ok(out)
    }
}

fn build_instance(
    sentence: &SourceSentence,
    records: &[Option<&EntityRecord>],
    language: &str,
    mut entity_tokens: impl FnMut(usize) -> Result<Vec<String>, GenerateError>,
) -> Result<CsInstance, GenerateError> {
    let mut tokens = Vec::with_capacity(sentence.words.len() + 2 * sentence.wikilinks.len());
    let mut spans = Vec::with_capacity(sentence.wikilinks.len());
    let mut cursor = 0;
    for (k, link) in sentence.wikilinks.iter().enumerate() {
        tokens.extend_from_slice(&sentence.words[cursor..link.start]);
        tokens.push(ENTITY_OPEN.to_owned());
        let start = tokens.len();
        tokens.extend(entity_tokens(k)?);
        spans.push(EntitySpan {
            start,
            end: tokens.len(),
            qid: records[k].map(|r| r.qid().to_string()),
        });
        tokens.push(ENTITY_CLOSE.to_owned());
        cursor = link.end;
    }
    tokens.extend_from_slice(&sentence.words[cursor..]);
    Ok(CsInstance {
        instance_id: format!("{}/{language}", sentence.sentence_id),
        source_sentence_id: sentence.sentence_id.clone(),
        language: language.to_owned(),
        tokens,
        entity_spans: spans,
    })
}

/// Undoes switching: drops the indicators and puts each entity's source
/// display words back. Returns `None` if the instance does not line up with
/// the sentence.
pub fn revert_instance(instance: &CsInstance, sentence: &SourceSentence) -> Option<Vec<String>> {
    if instance.entity_spans.len() != sentence.wikilinks.len() {
        return None;
    }
    let mut out = Vec::with_capacity(sentence.words.len());
    let mut cursor = 0;
    for (span, link) in instance.entity_spans.iter().zip(&sentence.wikilinks) {
        if span.start == 0 || span.end > instance.tokens.len() || span.start < cursor + 1 {
            return None;
        }
        out.extend(instance.tokens[cursor..span.start - 1].iter().cloned());
        out.extend(sentence.words[link.start..link.end].iter().cloned());
        cursor = span.end + 1;
    }
    out.extend(instance.tokens.get(cursor..)?.iter().cloned());
    Some(out)
}
