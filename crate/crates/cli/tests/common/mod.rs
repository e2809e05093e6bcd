#![allow(dead_code)]

use std::ffi::OsStr;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

pub fn entitycs<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_entitycs"))
        .args(args)
        .env("ENTITYCS_LOG", "error")
        .output()
        .expect("binary runs")
}

/// Runs the binary and panics with its stderr unless it exits 0.
pub fn entitycs_ok<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<OsStr>,
{
    let out = entitycs(args);
    assert!(
        out.status.success(),
        "entitycs failed ({:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/pipeline")
}

pub fn read_jsonl(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// Every regular file under `dir`, by relative path.
pub fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

pub const SYNTH_LANGS: [&str; 12] = ["ar", "de", "el", "es", "fr", "hi", "ja", "ko", "ru", "sw", "tr", "zh"];
const FILLER: &[&str] = &[
    "the", "of", "and", "in", "was", "a", "city", "river", "known", "for", "its", "old", "market", "near", "north",
    "with", "many", "people", "during", "war", "built", "by", "later", "became", "part",
];

/// A synthetic dump: documents with wikilinks, plus sitelink and label TSVs.
pub struct SyntheticCorpus {
    pub docs: String,
    pub sitelinks: String,
    pub labels: String,
    pub sentences: usize,
}

/// `entities` indexed entities (plus a few unindexed titles), and
/// `docs * sentences_per_doc` sentences each carrying 1-4 links. Every
/// sentence survives extraction: no inner terminal punctuation, fewer than
/// 128 words.
pub fn synthetic_corpus(seed: u64, entities: usize, docs: usize, sentences_per_doc: usize) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sitelinks = String::new();
    let mut labels = String::new();
    let titles: Vec<String> = (0..entities).map(|k| format!("Entity {k}")).collect();
    for (k, title) in titles.iter().enumerate() {
        let qid = format!("Q{}", 1000 + k);
        writeln!(sitelinks, "{title}\t{qid}").unwrap();
        for lang in SYNTH_LANGS {
            if rng.random_bool(0.7) {
                let words = rng.random_range(1..4);
                let label: Vec<String> = (0..words).map(|w| format!("{lang}{k}w{w}")).collect();
                writeln!(labels, "{qid}\t{lang}\t{}", label.join(" ")).unwrap();
            }
        }
    }
    let mut out = String::new();
    for d in 0..docs {
        let mut text = String::new();
        for s in 0..sentences_per_doc {
            if s > 0 {
                text.push(' ');
            }
            text.push_str("Start");
            for _ in 0..rng.random_range(1..5) {
                for _ in 0..rng.random_range(1..6) {
                    text.push(' ');
                    text.push_str(FILLER.choose(&mut rng).unwrap());
                }
                let target = if rng.random_bool(0.03) {
                    format!("Lost place {}", rng.random_range(0..10))
                } else {
                    titles.choose(&mut rng).unwrap().clone()
                };
                match rng.random_range(0..3) {
                    0 => write!(text, " [[{target}]]").unwrap(),
                    1 => write!(
                        text,
                        " [[{}|display {}]]",
                        target.replace(' ', "_"),
                        rng.random_range(0..100)
                    )
                    .unwrap(),
                    _ => write!(text, " [[{target}|here]]").unwrap(),
                }
            }
            text.push_str(" end.");
        }
        let doc = serde_json::json!({ "id": format!("d{d}"), "title": format!("Doc {d}"), "text": text });
        writeln!(out, "{doc}").unwrap();
    }
    SyntheticCorpus {
        docs: out,
        sitelinks,
        labels,
        sentences: docs * sentences_per_doc,
    }
}

impl SyntheticCorpus {
    pub fn write(&self, dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
        fs::create_dir_all(dir).unwrap();
        let paths = (
            dir.join("docs.jsonl"),
            dir.join("sitelinks.tsv"),
            dir.join("labels.tsv"),
        );
        fs::write(&paths.0, &self.docs).unwrap();
        fs::write(&paths.1, &self.sitelinks).unwrap();
        fs::write(&paths.2, &self.labels).unwrap();
        paths
    }
}
