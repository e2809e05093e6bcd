//! Wikilink-annotated article text to filtered [`SourceSentence`] records.

pub mod segment;
pub mod tokenize;
pub mod wikilink;

use std::borrow::Cow;
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{ENTITY_CLOSE, ENTITY_OPEN};
pub use segment::{segment_sentences, RuleSegmenter, SentenceSegmenter};
pub use tokenize::{tokenize_with_links, tokenize_words};
pub use wikilink::{parse_wikilinks, LinkMatch, ParsedText};

pub const DEFAULT_MAX_WORDS: usize = 128;

/// One article as produced by a link-preserving text extractor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    #[serde(default)]
    pub title: String,
    pub text: String,
}

/// A link inside a sentence. `start..end` is a half-open word-token span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WikiLink {
    pub target_title: String,
    pub display_text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSentence {
    pub sentence_id: String,
    pub doc_id: String,
    pub words: Vec<String>,
    pub wikilinks: Vec<WikiLink>,
}

impl SourceSentence {
    /// Checks the record-level invariants: at least one link, at most
    /// `max_words` words, links in bounds, non-empty, sorted and disjoint.
    pub fn validate(&self, max_words: usize) -> Result<(), String> {
        if self.wikilinks.is_empty() {
            return Err("sentence has no wikilinks".into());
        }
        if self.words.len() > max_words {
            return Err(format!("{} words exceeds limit {max_words}", self.words.len()));
        }
        let mut prev_end = 0;
        for link in &self.wikilinks {
            if link.start >= link.end || link.end > self.words.len() || link.start < prev_end {
                return Err(format!(
                    "link span {}..{} invalid for {} words",
                    link.start,
                    link.end,
                    self.words.len()
                ));
            }
            prev_end = link.end;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("document {doc_id}: {message}")]
    Document { doc_id: String, message: String },
    #[error("input record {line}: {source}")]
    Decode {
        line: usize,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
}

/// Counters describing one extraction run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractCounters {
    pub documents: u64,
    pub failed_documents: u64,
    pub sentences_segmented: u64,
    pub sentences_kept: u64,
    pub dropped_without_link: u64,
    pub dropped_too_long: u64,
    pub links_kept: u64,
    pub malformed_links: u64,
    pub escaped_indicators: u64,
    pub suppressed_boundaries: u64,
}

impl AddAssign<&ExtractCounters> for ExtractCounters {
    fn add_assign(&mut self, o: &ExtractCounters) {
        self.documents += o.documents;
        self.failed_documents += o.failed_documents;
        self.sentences_segmented += o.sentences_segmented;
        self.sentences_kept += o.sentences_kept;
        self.dropped_without_link += o.dropped_without_link;
        self.dropped_too_long += o.dropped_too_long;
        self.links_kept += o.links_kept;
        self.malformed_links += o.malformed_links;
        self.escaped_indicators += o.escaped_indicators;
        self.suppressed_boundaries += o.suppressed_boundaries;
    }
}

/// Output of [`Extractor::extract_document`].
#[derive(Debug, Clone, Default)]
pub struct DocumentOutput {
    pub sentences: Vec<SourceSentence>,
    pub counters: ExtractCounters,
}

/// Escapes literal entity indicators so they can never be confused with the
/// markers inserted later: `<e>` becomes `\<e>` and `</e>` becomes `\</e>`.
pub fn escape_indicators(text: &str) -> (Cow<'_, str>, usize) {
    if !text.contains(ENTITY_OPEN) && !text.contains(ENTITY_CLOSE) {
        return (Cow::Borrowed(text), 0);
    }
    let mut out = String::with_capacity(text.len() + 8);
    let mut count = 0;
    let mut rest = text;
    while let Some(pos) = rest.find('<') {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        if tail.starts_with(ENTITY_OPEN) || tail.starts_with(ENTITY_CLOSE) {
            out.push('\\');
            count += 1;
        }
        out.push('<');
        rest = &tail[1..];
    }
    out.push_str(rest);
    (Cow::Owned(out), count)
}

/// Pure per-document extraction: parse links, segment, tokenize, filter.
pub struct Extractor {
    segmenter: Box<dyn SentenceSegmenter>,
    max_words: usize,
}

impl Default for Extractor {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_WORDS)
    }
}

impl Extractor {
    pub fn new(max_words: usize) -> Self {
        Self::with_segmenter(Box::new(RuleSegmenter::default()), max_words)
    }

    pub fn with_segmenter(segmenter: Box<dyn SentenceSegmenter>, max_words: usize) -> Self {
        Self { segmenter, max_words }
    }

    pub fn max_words(&self) -> usize {
        self.max_words
    }

    /// Extracts the sentences of one document that contain at least one link
    /// and at most `max_words` words. Sentence ids are `doc_id#k` where `k`
    /// counts every segmented sentence of the document, kept or not.
    pub fn extract_document(&self, doc: &RawDocument) -> Result<DocumentOutput, ExtractError> {
        if doc.id.is_empty() {
            return Err(ExtractError::Document {
                doc_id: String::new(),
                message: "empty document id".into(),
            });
        }
        let mut counters = ExtractCounters {
            documents: 1,
            ..Default::default()
        };
        let (escaped, n_escaped) = escape_indicators(&doc.text);
        counters.escaped_indicators = n_escaped as u64;

        let parsed = parse_wikilinks(&escaped);
        counters.malformed_links = parsed.malformed as u64;
        let spans: Vec<_> = parsed.links.iter().map(|l| l.span.clone()).collect();
        let (sentences, suppressed) = segment_sentences(self.segmenter.as_ref(), &parsed.plain, &spans);
        counters.suppressed_boundaries = suppressed as u64;
        counters.sentences_segmented = sentences.len() as u64;

        let mut out = Vec::new();
        for (k, sentence) in sentences.iter().enumerate() {
            if sentence.links.is_empty() {
                counters.dropped_without_link += 1;
                continue;
            }
            let text = &parsed.plain[sentence.range.clone()];
            let rel: Vec<_> = sentence.links.iter().map(|(_, r)| r.clone()).collect();
            let (words, token_spans) = tokenize_with_links(text, &rel);
            if words.len() > self.max_words {
                counters.dropped_too_long += 1;
                continue;
            }
            let wikilinks = sentence
                .links
                .iter()
                .zip(token_spans)
                .map(|((idx, _), span)| {
                    let link = &parsed.links[*idx];
                    WikiLink {
                        target_title: link.target.clone(),
                        display_text: link.display.clone(),
                        start: span.start,
                        end: span.end,
                    }
                })
                .collect::<Vec<_>>();
            counters.links_kept += wikilinks.len() as u64;
            counters.sentences_kept += 1;
            out.push(SourceSentence {
                sentence_id: format!("{}#{k}", doc.id),
                doc_id: doc.id.clone(),
                words,
                wikilinks,
            });
        }
        Ok(DocumentOutput {
            sentences: out,
            counters,
        })
    }

    /// Sequential streaming composition over documents. Failed documents are
    /// yielded as errors and the stream continues with the next one.
    pub fn extract_stream<'a, I, E>(
        &'a self,
        docs: I,
    ) -> impl Iterator<Item = Result<SourceSentence, ExtractError>> + 'a
    where
        I: IntoIterator<Item = Result<RawDocument, E>> + 'a,
        E: Into<ExtractError>,
    {
        docs.into_iter().flat_map(move |doc| {
            let batch: Vec<Result<SourceSentence, ExtractError>> =
                match doc.map_err(Into::into).and_then(|d| self.extract_document(&d)) {
                    Ok(output) => output.sentences.into_iter().map(Ok).collect(),
                    Err(e) => vec![Err(e)],
                };
            batch
        })
    }
}

impl From<std::convert::Infallible> for ExtractError {
    fn from(e: std::convert::Infallible) -> Self {
        match e {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, text: &str) -> RawDocument {
        RawDocument {
            id: id.into(),
            title: String::new(),
            text: text.into(),
        }
    }

    fn extract(text: &str) -> DocumentOutput {
        Extractor::default().extract_document(&doc("d", text)).unwrap()
    }

    #[test]
    fn unlinked_sentence_is_dropped() {
        let out = extract("The city of [[Paris]] is the capital of a large country. Nothing links here.");
        assert_eq!(out.sentences.len(), 1);
        let s = &out.sentences[0];
        assert_eq!(s.sentence_id, "d#0");
        assert_eq!(s.words.len(), 11);
        assert_eq!(s.wikilinks[0].start..s.wikilinks[0].end, 3..4);
        assert_eq!(out.counters.dropped_without_link, 1);
    }

    #[test]
    fn length_filter_boundary() {
        let body = |n: usize| {
            let mut words: Vec<String> = (1..n).map(|i| format!("w{i}")).collect();
            words.insert(0, "[[Paris]]".into());
            words.join(" ")
        };
        assert_eq!(extract(&body(128)).sentences.len(), 1);
        let out = extract(&body(129));
        assert!(out.sentences.is_empty());
        assert_eq!(out.counters.dropped_too_long, 1);
    }

    #[test]
    fn indicators_in_text_are_escaped() {
        let out = extract("A <e> tag near [[Paris]] and </e>.");
        let s = &out.sentences[0];
        assert_eq!(out.counters.escaped_indicators, 2);
        assert!(s.words.iter().all(|w| w != ENTITY_OPEN && w != ENTITY_CLOSE));
        assert!(s.words.contains(&"\\<e>".to_string()));
    }

    #[test]
    fn escape_leaves_other_tags_alone() {
        assert_eq!(escape_indicators("<b> <e>x</e>").0, "<b> \\<e>x\\</e>");
        assert!(matches!(escape_indicators("no tags").0, Cow::Borrowed(_)));
    }

    #[test]
    fn empty_id_is_a_document_error() {
        let err = Extractor::default().extract_document(&doc("", "[[A]]")).unwrap_err();
        assert!(matches!(err, ExtractError::Document { .. }));
    }

    #[test]
    fn stream_continues_after_failure() {
        let docs = vec![
            Ok(doc("a", "See [[Paris]].")),
            Ok(doc("", "See [[Rome]].")),
            Ok(doc("c", "See [[Oslo]].")),
        ];
        let ex = Extractor::default();
        let results: Vec<_> = ex.extract_stream::<_, std::convert::Infallible>(docs).collect();
        assert_eq!(results.len(), 3);
        assert!(results[1].is_err());
        assert_eq!(results[2].as_ref().unwrap().doc_id, "c");
    }

    #[test]
    fn emitted_sentences_satisfy_invariants() {
        let out = extract(
            "[[A]] and [[B|b b]]. [[C]]! Mr. [[D]] went to St. [[Louis]]. Plain text. \
             [[E]] [[F]] [[G]]",
        );
        assert_eq!(out.sentences.len(), 4);
        for s in &out.sentences {
            s.validate(128).unwrap();
        }
    }
}
