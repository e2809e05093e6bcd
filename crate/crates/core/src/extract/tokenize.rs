//! Whitespace word tokenization.

use std::ops::Range;

/// Splits on Unicode whitespace, keeping punctuation attached to its word.
pub fn tokenize_words(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}

/// Tokenizes a sentence so that every link span starts and ends on a token
/// boundary, returning the words and each link's half-open token span.
///
/// `links` must be sorted and non-overlapping byte ranges into `text`. Text
/// glued to a link (`Paris.`) is split off into its own token so the link's
/// tokens can later be replaced without disturbing surrounding words.
pub fn tokenize_with_links(text: &str, links: &[Range<usize>]) -> (Vec<String>, Vec<Range<usize>>) {
    let mut words = Vec::new();
    let mut spans = Vec::with_capacity(links.len());
    let mut cursor = 0;
    for link in links {
        words.extend(text[cursor..link.start].split_whitespace().map(str::to_owned));
        let start = words.len();
        words.extend(text[link.clone()].split_whitespace().map(str::to_owned));
        spans.push(start..words.len());
        cursor = link.end;
    }
    words.extend(text[cursor..].split_whitespace().map(str::to_owned));
    (words, spans)
}
