//! Extraction over a generated 20-document fixture, checked against a
//! line-oriented recount. Every line is one sentence (no inner terminal
//! punctuation), so the reference never needs a segmenter.

use entitycs_core::extract::{ExtractCounters, Extractor, RawDocument};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VOCAB: &[&str] = &[
    "the", "river", "flows", "past", "old", "towns", "and", "fields", "into", "a", "wide", "bay",
];
const TITLES: &[&str] = &["Rhine", "North Sea", "Basel", "Lake Constance", "Rotterdam"];

fn fixture() -> Vec<RawDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    (0..20)
        .map(|d| {
            let lines: Vec<String> = (0..rng.random_range(1..8))
                .map(|_| {
                    let len = match rng.random_range(0..10) {
                        0 => rng.random_range(120..140),
                        _ => rng.random_range(3..30),
                    };
                    let mut words = Vec::with_capacity(len);
                    for _ in 0..len {
                        if rng.random_bool(0.1) {
                            let t = TITLES.choose(&mut rng).unwrap();
                            let w = match rng.random_range(0..3) {
                                0 => format!("[[{t}]]"),
                                1 => format!("[[{t}|{}]]", VOCAB.choose(&mut rng).unwrap()),
                                _ => format!("[[{t}|{t}]]"),
                            };
                            words.push(w);
                        } else if rng.random_bool(0.01) {
                            words.push("[[broken".to_owned());
                        } else {
                            words.push(VOCAB.choose(&mut rng).unwrap().to_string());
                        }
                    }
                    words.join(" ")
                })
                .collect();
            RawDocument {
                id: format!("doc{d}"),
                title: format!("Doc {d}"),
                text: lines.join("\n"),
            }
        })
        .collect()
}

#[derive(Debug, Default, PartialEq)]
struct Recount {
    kept: u64,
    links: u64,
    words: u64,
    dropped_long: u64,
    dropped_unlinked: u64,
    malformed: u64,
}

fn render(line: &str) -> String {
    let mut out = String::new();
    let mut rest = line;
    while let Some(i) = rest.find("[[") {
        out.push_str(&rest[..i]);
        let after = &rest[i + 2..];
        if after.starts_with("broken") {
            out.push_str("[[");
            rest = after;
            continue;
        }
        let j = after.find("]]").unwrap();
        out.push_str(after[..j].rsplit('|').next().unwrap());
        rest = &after[j + 2..];
    }
    out + rest
}

fn recount(docs: &[RawDocument]) -> Recount {
    let mut r = Recount::default();
    for doc in docs {
        for line in doc.text.lines() {
            let links = line.matches("[[").count() - line.matches("[[broken").count();
            r.malformed += line.matches("[[broken").count() as u64;
            let plain = render(line);
            let words = plain.split_whitespace().count();
            if links == 0 {
                r.dropped_unlinked += 1;
            } else if words > 128 {
                r.dropped_long += 1;
            } else {
                r.kept += 1;
                r.links += links as u64;
                r.words += words as u64;
            }
        }
    }
    r
}

#[test]
fn counts_match_line_recount() {
    let docs = fixture();
    let ex = Extractor::default();
    let mut counters = ExtractCounters::default();
    let mut words = 0;
    for d in &docs {
        let out = ex.extract_document(d).unwrap();
        for s in &out.sentences {
            s.validate(128).unwrap();
            words += s.words.len() as u64;
        }
        counters += &out.counters;
    }
    let want = recount(&docs);
    assert!(want.kept > 20 && want.dropped_long > 0 && want.dropped_unlinked > 0 && want.malformed > 0);
    let got = Recount {
        kept: counters.sentences_kept,
        links: counters.links_kept,
        words,
        dropped_long: counters.dropped_too_long,
        dropped_unlinked: counters.dropped_without_link,
        malformed: counters.malformed_links,
    };
    assert_eq!(got, want);
}

#[test]
fn stream_is_deterministic() {
    let docs = fixture();
    let ex = Extractor::default();
    let run = || {
        ex.extract_stream(docs.iter().cloned().map(Ok::<_, std::convert::Infallible>))
            .map(|s| serde_json::to_string(&s.unwrap()).unwrap())
            .collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}
