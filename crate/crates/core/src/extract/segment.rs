//! Rule-based sentence segmentation.
//!
//! A sentence ends after a run of terminal punctuation (`.`, `!`, `?`, plus
//! any closing quotes or brackets) that is followed by whitespace and then by
//! a capitalised word or a digit. A period does not end a sentence when the
//! word before it is a known abbreviation, a capital initial, or a
//! dotted acronym such as `U.S.`. Line breaks always end a sentence.

use std::collections::HashSet;
use std::ops::Range;

/// Splits text into sentences. Implementations return sorted byte offsets at
/// which one sentence ends and the next may begin.
pub trait SentenceSegmenter: Send + Sync {
    fn split_points(&self, text: &str) -> Vec<usize>;
}

/// Lowercased, without the trailing period.
pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "mt", "ft", "rev", "gen", "col", "lt", "sgt", "capt", "cmdr",
    "adm", "gov", "sen", "rep", "pres", "hon", "messrs", "vs", "etc", "e.g", "i.e", "cf", "al", "approx", "ca", "c",
    "inc", "ltd", "co", "corp", "bros", "dept", "est", "no", "nos", "vol", "vols", "fig", "figs", "ed", "eds", "pp",
    "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec", "ave", "blvd", "rd",
];

const CLOSERS: &[char] = &['"', '\'', ')', ']', '\u{201D}', '\u{2019}', '\u{BB}'];
const OPENERS: &[char] = &['"', '\'', '(', '[', '\u{201C}', '\u{2018}', '\u{AB}'];

#[derive(Debug, Clone)]
pub struct RuleSegmenter {
    abbreviations: HashSet<String>,
}

impl Default for RuleSegmenter {
    fn default() -> Self {
        Self::with_abbreviations(DEFAULT_ABBREVIATIONS.iter().copied())
    }
}

impl RuleSegmenter {
    pub fn with_abbreviations<'a>(abbreviations: impl IntoIterator<Item = &'a str>) -> Self {
        Self {
            abbreviations: abbreviations.into_iter().map(str::to_lowercase).collect(),
        }
    }

    fn is_abbreviation(&self, word: &str) -> bool {
        let word = word.trim_start_matches(OPENERS);
        if word.is_empty() {
            return false;
        }
        let mut chars = word.chars();
        let first = chars.next().unwrap();
        if chars.next().is_none() && first.is_uppercase() {
            return true;
        }
        if self.abbreviations.contains(&word.to_lowercase()) {
            return true;
        }
        // Dotted acronyms: U.S, e.g, Ph.D
        word.contains('.')
            && word
                .split('.')
                .all(|p| !p.is_empty() && p.chars().count() <= 2 && p.chars().all(char::is_alphabetic))
    }
}

impl SentenceSegmenter for RuleSegmenter {
    fn split_points(&self, text: &str) -> Vec<usize> {
        let bytes = text.as_bytes();
        let mut points = Vec::new();
        let mut i = 0;
        while i < bytes.len() {
            match bytes[i] {
                b'\n' => {
                    points.push(i);
                    i += 1;
                }
                b'.' | b'!' | b'?' => {
                    let punct_start = i;
                    let mut end = i;
                    while end < bytes.len() && matches!(bytes[end], b'.' | b'!' | b'?') {
                        end += 1;
                    }
                    let only_period = end - punct_start == 1 && bytes[punct_start] == b'.';
                    let mut tail = text[end..].char_indices();
                    let mut after = end;
                    for (off, c) in tail.by_ref() {
                        if CLOSERS.contains(&c) {
                            after = end + off + c.len_utf8();
                        } else {
                            break;
                        }
                    }
                    i = after;
                    if !starts_new_sentence(&text[after..]) {
                        continue;
                    }
                    if only_period {
                        let word_start = text[..punct_start]
                            .rfind(char::is_whitespace)
                            .map_or(0, |p| p + text[p..].chars().next().unwrap().len_utf8());
                        if self.is_abbreviation(&text[word_start..punct_start]) {
                            continue;
                        }
                    }
                    points.push(after);
                }
                _ => i += 1,
            }
        }
        points
    }
}

/// True when `rest` is whitespace followed by a capitalised word or digit.
fn starts_new_sentence(rest: &str) -> bool {
    let trimmed = rest.trim_start_matches(|c: char| c.is_whitespace() && c != '\n');
    if trimmed.len() == rest.len() {
        return false;
    }
    let mut chars = trimmed.chars().skip_while(|c| OPENERS.contains(c));
    match chars.next() {
        Some(c) => c.is_uppercase() || c.is_ascii_digit(),
        // A line break right after the punctuation is a boundary of its own.
        None => false,
    }
}

/// Cuts `plain_text` into trimmed sentences, suppressing any split point that
/// falls strictly inside a link, and re-bases each link onto its sentence.
///
/// Returns the non-empty sentences in order, plus the number of split points
/// that were suppressed because they fell inside a link.
pub fn segment_sentences(
    segmenter: &dyn SentenceSegmenter,
    plain_text: &str,
    links: &[Range<usize>],
) -> (Vec<Sentence>, usize) {
    let mut points = segmenter.split_points(plain_text);
    points.sort_unstable();
    points.dedup();

    let mut suppressed = 0;
    let mut link_iter = links.iter().peekable();
    points.retain(|&p| {
        while link_iter.peek().is_some_and(|l| l.end <= p) {
            link_iter.next();
        }
        let inside = link_iter.peek().is_some_and(|l| l.start < p && p < l.end);
        suppressed += usize::from(inside);
        !inside
    });

    let mut sentences = Vec::new();
    let mut next_link = 0;
    let mut start = 0;
    for end in points.into_iter().chain(std::iter::once(plain_text.len())) {
        let piece = &plain_text[start..end];
        let lead = piece.len() - piece.trim_start().len();
        let body = piece.trim();
        let range = start + lead..start + lead + body.len();
        let first = next_link;
        while next_link < links.len() && links[next_link].end <= end {
            next_link += 1;
        }
        if !body.is_empty() {
            sentences.push(Sentence {
                range: range.clone(),
                links: (first..next_link)
                    .map(|k| (k, links[k].start - range.start..links[k].end - range.start))
                    .collect(),
            });
        }
        start = end;
    }
    (sentences, suppressed)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub range: Range<usize>,
    /// `(index into the input links, span relative to the sentence start)`.
    pub links: Vec<(usize, Range<usize>)>,
}
