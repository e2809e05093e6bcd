use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::CsInstance;
use crate::ENGLISH;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageCounts {
    pub sentences: u64,
    pub entities: u64,
}

/// Corpus statistics. Sentence length and entities per sentence are averaged
/// over the English instances; lengths exclude indicator tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    /// Distinct languages present, English included.
    pub languages: u64,
    pub english_sentences: u64,
    pub english_entities: u64,
    pub average_sentence_length: f64,
    pub average_entities_per_sentence: f64,
    /// Largest number of switched instances produced from one source sentence.
    pub max_cs_sentences_per_en_sentence: u64,
    pub cs_sentences: u64,
    pub cs_entities: u64,
    /// Switched instances and entities per language, English excluded.
    pub per_language: BTreeMap<String, LanguageCounts>,
}

#[derive(Debug, Default)]
pub struct StatsAccumulator {
    english: LanguageCounts,
    english_words: u64,
    per_language: BTreeMap<String, LanguageCounts>,
    cs_per_source: HashMap<String, u64>,
}

impl StatsAccumulator {
    pub fn add(&mut self, instance: &CsInstance) {
        let entities = instance.entity_spans.len() as u64;
        if instance.language == ENGLISH {
            self.english.sentences += 1;
            self.english.entities += entities;
            self.english_words += instance.word_count() as u64;
        } else {
            let slot = self.per_language.entry(instance.language.clone()).or_default();
            slot.sentences += 1;
            slot.entities += entities;
            *self
                .cs_per_source
                .entry(instance.source_sentence_id.clone())
                .or_default() += 1;
        }
    }

    pub fn finish(self) -> StatsReport {
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let (cs_sentences, cs_entities) = self
            .per_language
            .values()
            .fold((0, 0), |(s, e), c| (s + c.sentences, e + c.entities));
        StatsReport {
            languages: self.per_language.len() as u64 + u64::from(self.english.sentences > 0),
            english_sentences: self.english.sentences,
            english_entities: self.english.entities,
            average_sentence_length: ratio(self.english_words, self.english.sentences),
            average_entities_per_sentence: ratio(self.english.entities, self.english.sentences),
            max_cs_sentences_per_en_sentence: self.cs_per_source.values().copied().max().unwrap_or(0),
            cs_sentences,
            cs_entities,
            per_language: self.per_language,
        }
    }
}

impl<'a> FromIterator<&'a CsInstance> for StatsReport {
    fn from_iter<T: IntoIterator<Item = &'a CsInstance>>(iter: T) -> Self {
        let mut acc = StatsAccumulator::default();
        iter.into_iter().for_each(|i| acc.add(i));
        acc.finish()
    }
}
