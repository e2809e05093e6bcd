//! Masked training examples from code-switched instances.
//!
//! Every strategy follows one rule set. A position (or, for whole-entity
//! strategies, an entire entity) is selected as a candidate with probability
//! `p`; a selected candidate is then replaced by the mask token, replaced by
//! a random vocabulary id, or kept, with the probabilities of its
//! [`ActionSplit`]. All three actions put the original id in the label. When
//! the split sums to less than one, the remainder keeps the token with no
//! label. Unselected positions are kept and unlabeled.
//!
//! Entity positions follow the entity rule and all other positions the
//! non-entity rule. Entity positions are never candidates under the
//! non-entity rule, even when their entity was not selected.

mod strategy;
pub mod tokenizer;

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generate::CsInstance;
use crate::seed::record_rng;
use crate::{ENTITY_CLOSE, ENTITY_OPEN};
pub use strategy::{ActionSplit, CandidateRule, Strategy};
pub use tokenizer::{SubwordTokenizer, TokenizeError, ToyTokenizer, VocabTokenizer};

/// Label value of positions without a prediction target.
pub const IGNORE_LABEL: i32 = -100;

const SPLIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MaskError {
    #[error("invalid masking configuration: {0}")]
    Config(String),
    #[error("token {token:?}: {source}")]
    Tokenize {
        token: String,
        #[source]
        source: TokenizeError,
    },
    #[error("entity indicators: {0}")]
    Indicators(String),
    #[error("instance {instance_id}: {source}")]
    Instance {
        instance_id: String,
        #[source]
        source: Box<MaskError>,
    },
}

/// Subword ids of one instance with entity spans mapped onto them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubwordSequence {
    pub ids: Vec<u32>,
    /// Sorted, disjoint, non-empty subword ranges, one per entity.
    pub entity_spans: Vec<Range<usize>>,
    pub language: String,
}

/// Tokenizes an instance word by word, drops the entity indicators and maps
/// each entity onto the subwords of its words.
pub fn subword_tokenize(instance: &CsInstance, tok: &dyn SubwordTokenizer) -> Result<SubwordSequence, MaskError> {
    let mut ids = Vec::with_capacity(instance.tokens.len() * 2);
    let mut spans = Vec::with_capacity(instance.entity_spans.len());
    let mut word_spans = Vec::with_capacity(instance.entity_spans.len());
    let mut open: Option<(usize, usize)> = None;
    for (pos, token) in instance.tokens.iter().enumerate() {
        match token.as_str() {
            ENTITY_OPEN => {
                if open.is_some() {
                    return Err(MaskError::Indicators(format!("nested {ENTITY_OPEN} at token {pos}")));
                }
                open = Some((pos + 1, ids.len()));
            }
            ENTITY_CLOSE => {
                let Some((word_start, start)) = open.take() else {
                    return Err(MaskError::Indicators(format!(
                        "unmatched {ENTITY_CLOSE} at token {pos}"
                    )));
                };
                if start == ids.len() {
                    return Err(MaskError::Indicators(format!("empty entity at token {pos}")));
                }
                spans.push(start..ids.len());
                word_spans.push((word_start, pos));
            }
            word => tok
                .tokenize_word(word, &mut ids)
                .map_err(|source| MaskError::Tokenize {
                    token: word.to_owned(),
                    source,
                })?,
        }
    }
    if open.is_some() {
        return Err(MaskError::Indicators(format!("unclosed {ENTITY_OPEN}")));
    }
    let declared: Vec<(usize, usize)> = instance.entity_spans.iter().map(|s| (s.start, s.end)).collect();
    if declared != word_spans {
        return Err(MaskError::Indicators(
            "indicator positions disagree with entity_spans".into(),
        ));
    }
    Ok(SubwordSequence {
        ids,
        entity_spans: spans,
        language: instance.language.clone(),
    })
}

/// Vocabulary facts the masker needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabInfo {
    pub size: u32,
    pub mask_id: u32,
    /// Sorted; never drawn as random replacements. Includes `mask_id`.
    pub special_ids: Vec<u32>,
}

impl VocabInfo {
    pub fn new(size: u32, mask_id: u32, special_ids: impl IntoIterator<Item = u32>) -> Self {
        let mut special_ids: Vec<u32> = special_ids.into_iter().chain([mask_id]).collect();
        special_ids.sort_unstable();
        special_ids.dedup();
        Self {
            size,
            mask_id,
            special_ids,
        }
    }

    pub fn of(tok: &dyn SubwordTokenizer) -> Self {
        Self::new(tok.vocab_size(), tok.mask_id(), tok.special_ids().iter().copied())
    }

    /// Uniform over the ids that are not special.
    pub fn random_id<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let mut id = rng.random_range(0..self.size - self.special_ids.len() as u32);
        for &s in &self.special_ids {
            if id >= s {
                id += 1;
            } else {
                break;
            }
        }
        id
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskingConfig {
    pub strategy: Strategy,
    pub entity: CandidateRule,
    pub non_entity: CandidateRule,
    pub vocab: VocabInfo,
    pub rng_seed: u64,
}

impl MaskingConfig {
    /// The strategy's default rates.
    pub fn new(strategy: Strategy, vocab: VocabInfo, rng_seed: u64) -> Self {
        let (entity, non_entity) = strategy.default_rules();
        Self {
            strategy,
            entity,
            non_entity,
            vocab,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<(), MaskError> {
        let err = |m: String| Err(MaskError::Config(m));
        for (name, rule) in [("entity", &self.entity), ("non-entity", &self.non_entity)] {
            let ActionSplit { mask, random, same } = rule.split;
            if !(0.0..=1.0).contains(&rule.p) {
                return err(format!("{name} p = {} outside [0, 1]", rule.p));
            }
            if [mask, random, same].iter().any(|v| !v.is_finite() || *v < 0.0) {
                return err(format!("{name} split has a negative component"));
            }
            if rule.split.labeled() > 1.0 + SPLIT_TOLERANCE {
                return err(format!("{name} split sums to {} > 1", rule.split.labeled()));
            }
        }
        if self.strategy.is_whole_entity() && self.entity.split.random != 0.0 {
            return err(format!(
                "{} does not allow random replacement inside entities",
                self.strategy
            ));
        }
        if self.strategy.is_entity_only() && self.non_entity.p != 0.0 {
            return err(format!("{} never selects non-entity positions", self.strategy));
        }
        if self.strategy == Strategy::Mlm && self.entity != self.non_entity {
            return err("mlm treats entity and non-entity positions alike".into());
        }
        if self.vocab.mask_id >= self.vocab.size {
            return err("mask id outside the vocabulary".into());
        }
        if self.vocab.special_ids.len() as u32 >= self.vocab.size {
            return err("vocabulary has no non-special ids to draw from".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Action {
    Mask,
    Random,
    Same,
    Keep,
}

fn draw_action<R: Rng + ?Sized>(split: &ActionSplit, rng: &mut R) -> Action {
    let u: f64 = rng.random();
    if u < split.mask {
        Action::Mask
    } else if u < split.mask + split.random {
        Action::Random
    } else if u < split.mask + split.random + split.same {
        Action::Same
    } else {
        Action::Keep
    }
}

fn selected<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    // p = 1 must always select; random() is in [0, 1).
    p > 0.0 && rng.random::<f64>() < p
}

/// Parallel corrupted input and labels for one sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedExample {
    pub input_ids: Vec<u32>,
    pub labels: Vec<i32>,
}

struct Apply<'a> {
    source: &'a [u32],
    vocab: &'a VocabInfo,
    out: MaskedExample,
}

impl Apply<'_> {
    fn apply<R: Rng + ?Sized>(&mut self, i: usize, action: Action, rng: &mut R) {
        match action {
            Action::Keep => return,
            Action::Mask => self.out.input_ids[i] = self.vocab.mask_id,
            Action::Random => self.out.input_ids[i] = self.vocab.random_id(rng),
            Action::Same => {}
        }
        self.out.labels[i] = self.source[i] as i32;
    }

    fn non_entity<R: Rng + ?Sized>(&mut self, range: Range<usize>, rule: &CandidateRule, rng: &mut R) {
        if rule.p == 0.0 {
            return;
        }
        for i in range {
            if selected(rule.p, rng) {
                let action = draw_action(&rule.split, rng);
                self.apply(i, action, rng);
            }
        }
    }
}

/// Masks one sequence. `cfg` is assumed valid (see [`MaskingConfig::validate`]).
pub fn mask<R: Rng + ?Sized>(seq: &SubwordSequence, cfg: &MaskingConfig, rng: &mut R) -> MaskedExample {
    let mut state = Apply {
        source: &seq.ids,
        vocab: &cfg.vocab,
        out: MaskedExample {
            input_ids: seq.ids.clone(),
            labels: vec![IGNORE_LABEL; seq.ids.len()],
        },
    };
    let whole = cfg.strategy.is_whole_entity();
    let mut cursor = 0;
    for span in &seq.entity_spans {
        state.non_entity(cursor..span.start, &cfg.non_entity, rng);
        if whole {
            if selected(cfg.entity.p, rng) {
                let action = draw_action(&cfg.entity.split, rng);
                for i in span.clone() {
                    state.apply(i, action, rng);
                }
            }
        } else {
            for i in span.clone() {
                if selected(cfg.entity.p, rng) {
                    let action = draw_action(&cfg.entity.split, rng);
                    state.apply(i, action, rng);
                }
            }
        }
        cursor = span.end;
    }
    state.non_entity(cursor..seq.ids.len(), &cfg.non_entity, rng);
    state.out
}

/// One line of masked output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedRecord {
    pub instance_id: String,
    pub input_ids: Vec<u32>,
    pub labels: Vec<i32>,
}

/// Tokenizes and masks one instance with an RNG derived from the instance id.
pub fn mask_instance(
    instance: &CsInstance,
    tok: &dyn SubwordTokenizer,
    cfg: &MaskingConfig,
) -> Result<(SubwordSequence, MaskedRecord), MaskError> {
    let seq = subword_tokenize(instance, tok).map_err(|e| MaskError::Instance {
        instance_id: instance.instance_id.clone(),
        source: Box::new(e),
    })?;
    let mut rng = record_rng(cfg.rng_seed, &instance.instance_id);
    let MaskedExample { input_ids, labels } = mask(&seq, cfg, &mut rng);
    Ok((
        seq,
        MaskedRecord {
            instance_id: instance.instance_id.clone(),
            input_ids,
            labels,
        },
    ))
}

/// Readable rendering: masked positions as `[MASK]`, other ids as their
/// vocabulary text when known and `#id` otherwise. Labeled random and kept
/// positions are prefixed with `~` and `=` respectively.
pub fn render_text(record: &MaskedRecord, seq: &SubwordSequence, tok: &dyn SubwordTokenizer) -> String {
    let mask_id = tok.mask_id();
    record
        .input_ids
        .iter()
        .zip(&record.labels)
        .zip(&seq.ids)
        .map(|((&input, &label), &source)| {
            let text = tok.token_text(input).unwrap_or_else(|| format!("#{input}"));
            match (label == IGNORE_LABEL, input == mask_id, input == source) {
                (true, _, _) => text,
                (false, true, _) => "[MASK]".to_owned(),
                (false, false, true) => format!("={text}"),
                (false, false, false) => format!("~{text}"),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Aggregate counts over masked output.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskCounters {
    pub examples: u64,
    pub examples_without_entities: u64,
    pub subwords: u64,
    pub entity_subwords: u64,
    pub labeled: u64,
    pub masked: u64,
    pub replaced: u64,
}

impl MaskCounters {
    pub fn observe(&mut self, seq: &SubwordSequence, record: &MaskedRecord, mask_id: u32) {
        self.examples += 1;
        self.examples_without_entities += u64::from(seq.entity_spans.is_empty());
        self.subwords += seq.ids.len() as u64;
        self.entity_subwords += seq.entity_spans.iter().map(|s| s.len() as u64).sum::<u64>();
        for ((&input, &label), &source) in record.input_ids.iter().zip(&record.labels).zip(&seq.ids) {
            if label != IGNORE_LABEL {
                self.labeled += 1;
                if input == mask_id {
                    self.masked += 1;
                } else if input != source {
                    self.replaced += 1;
                }
            }
        }
    }
}
