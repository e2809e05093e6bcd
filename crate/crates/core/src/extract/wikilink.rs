//! Double-bracket wikilink parsing.

use std::ops::Range;

const OPEN: &str = "[[";
const CLOSE: &str = "]]";

/// One wikilink found in article text, located in the link-free output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkMatch {
    pub target: String,
    pub display: String,
    /// Byte range of `display` inside [`ParsedText::plain`].
    pub span: Range<usize>,
    /// Whether the source used `[[target|display]]` rather than `[[target]]`.
    pub piped: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedText {
    pub plain: String,
    pub links: Vec<LinkMatch>,
    /// Openings that could not be parsed as a link and were kept as literal text.
    pub malformed: usize,
}

/// Replaces every well-formed `[[target|display]]` or `[[target]]` with its
/// display text and records where that text landed.
///
/// An opening `[[` is malformed, and copied through verbatim, when it has no
/// closing `]]`, when another `[[` appears before its `]]`, when the enclosed
/// text spans a line or contains a stray bracket, or when the target or display
/// text is blank. Scanning resumes right after a malformed opening, so a
/// well-formed link nested inside a malformed one is still recovered.
pub fn parse_wikilinks(text: &str) -> ParsedText {
    let mut out = ParsedText {
        plain: String::with_capacity(text.len()),
        ..ParsedText::default()
    };
    let mut rest = text;

    while let Some(open) = rest.find(OPEN) {
        out.plain.push_str(&rest[..open]);
        let after = &rest[open + OPEN.len()..];

        let Some(close) = after.find(CLOSE) else {
            out.malformed += 1;
            out.plain.push_str(OPEN);
            rest = after;
            continue;
        };
        let inner = &after[..close];
        match split_link(inner) {
            Some((target, display, piped)) => {
                let start = out.plain.len();
                out.plain.push_str(display);
                out.links.push(LinkMatch {
                    target: target.to_owned(),
                    display: display.to_owned(),
                    span: start..out.plain.len(),
                    piped,
                });
                rest = &after[close + CLOSE.len()..];
            }
            None => {
                out.malformed += 1;
                out.plain.push_str(OPEN);
                rest = after;
            }
        }
    }
    out.plain.push_str(rest);
    out
}

/// Splits link content into `(target, display, piped)`; `None` if malformed.
fn split_link(inner: &str) -> Option<(&str, &str, bool)> {
    if inner.contains(['[', ']', '\n']) {
        return None;
    }
    let (target, display, piped) = match inner.split_once('|') {
        Some((t, d)) => (t.trim(), d.trim(), true),
        None => (inner.trim(), inner.trim(), false),
    };
    if target.is_empty() || display.is_empty() {
        return None;
    }
    Some((target, display, piped))
}

/// Re-inserts link markup at the recorded spans. Inverse of [`parse_wikilinks`]
/// for text whose links carry no padding whitespace and no malformed openings.
pub fn render_wikilinks(plain: &str, links: &[LinkMatch]) -> String {
    let mut out = String::with_capacity(plain.len() + links.len() * 8);
    let mut cursor = 0;
    for link in links {
        out.push_str(&plain[cursor..link.span.start]);
        out.push_str(OPEN);
        if link.piped {
            out.push_str(&link.target);
            out.push('|');
        }
        out.push_str(&plain[link.span.clone()]);
        out.push_str(CLOSE);
        cursor = link.span.end;
    }
    out.push_str(&plain[cursor..]);
    out
}
