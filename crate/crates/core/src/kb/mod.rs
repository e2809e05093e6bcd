//! English page title → knowledge-base identifier → per-language labels.
//!
//! The index is built once from two tab-separated streams and is immutable
//! afterwards; any number of readers can share it.
//!
//! ```text
//! sitelinks.tsv   <English title>\t<QID>
//! labels.tsv      <QID>\t<language code>\t<label>
//! ```
//!
//! Both are easy to produce from a Wikidata JSON dump: for every item emit
//! `sitelinks.enwiki.title` with the item id, and one row per entry of
//! `labels` whose language is in the target set.

mod binfmt;
mod langset;

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::escape_indicators;
use crate::ENGLISH;
pub use binfmt::{FORMAT_VERSION, MAGIC};
pub use langset::{LangId, LangSet, MAX_LANGUAGES};

const DEFAULT_LANGUAGES: &str = include_str!("../../data/languages.txt");

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("invalid language code {0:?}")]
    InvalidLanguage(String),
    #[error("English is the matrix language and cannot be a target")]
    EnglishTarget,
    #[error("{0} target languages exceeds the supported maximum of {MAX_LANGUAGES}")]
    TooManyLanguages(usize),
    #[error("malformed index file: {0}")]
    Format(String),
    #[error("unsupported index format version {0}")]
    UnsupportedVersion(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A knowledge-base item identifier, `Q` followed by a positive integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Qid(pub u64);

impl fmt::Display for Qid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}", self.0)
    }
}

impl FromStr for Qid {
    type Err = ();

    /// Accepts the canonical form only: no sign, no leading zeros.
    fn from_str(s: &str) -> Result<Self, ()> {
        let digits = s.strip_prefix('Q').ok_or(())?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
            return Err(());
        }
        digits.parse().map(Qid).map_err(|_| ())
    }
}

/// Lowercase ISO-639-style tag: two or three letters, optionally followed by
/// `-` separated lowercase alphanumeric subtags (`zh`, `sr-el`).
pub fn is_valid_language_code(code: &str) -> bool {
    let mut parts = code.split('-');
    let primary = parts.next().unwrap_or("");
    (2..=3).contains(&primary.len())
        && primary.bytes().all(|b| b.is_ascii_lowercase())
        && parts.all(|p| (2..=8).contains(&p.len()) && p.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit()))
}

/// Canonical form of a page title: underscores become spaces, surrounding
/// whitespace is dropped and the first character is upper-cased.
pub fn normalize_title(title: &str) -> Cow<'_, str> {
    let trimmed = title.trim();
    let first_ok = trimmed
        .chars()
        .next()
        .is_none_or(|c| c.to_uppercase().eq(std::iter::once(c)));
    if trimmed.len() == title.len() && first_ok && !trimmed.contains('_') {
        return Cow::Borrowed(title);
    }
    let replaced = trimmed.replace('_', " ");
    let trimmed = replaced.trim();
    let mut chars = trimmed.chars();
    match chars.next() {
        Some(c) => Cow::Owned(c.to_uppercase().chain(chars).collect()),
        None => Cow::Owned(String::new()),
    }
}

/// The ordered set of target languages an index was built for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Languages {
    codes: Vec<String>,
    ids: HashMap<String, LangId>,
}

impl Languages {
    /// Validates, de-duplicates and sorts the codes.
    pub fn new<S: AsRef<str>>(codes: impl IntoIterator<Item = S>) -> Result<Self, IndexError> {
        let mut sorted = Vec::new();
        for code in codes {
            let code = code.as_ref().trim();
            if code == ENGLISH {
                return Err(IndexError::EnglishTarget);
            }
            if !is_valid_language_code(code) {
                return Err(IndexError::InvalidLanguage(code.to_owned()));
            }
            sorted.push(code.to_owned());
        }
        sorted.sort();
        sorted.dedup();
        if sorted.len() > MAX_LANGUAGES {
            return Err(IndexError::TooManyLanguages(sorted.len()));
        }
        let ids = sorted
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i as LangId))
            .collect();
        Ok(Self { codes: sorted, ids })
    }

    /// Parses a list of codes separated by newlines or commas; `#` starts a
    /// comment.
    pub fn parse_list(text: &str) -> Result<Self, IndexError> {
        Self::new(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or(""))
                .flat_map(|l| l.split(','))
                .map(str::trim)
                .filter(|c| !c.is_empty()),
        )
    }

    /// The shipped 92-language default set.
    pub fn default_targets() -> Self {
        Self::parse_list(DEFAULT_LANGUAGES).expect("shipped language list is valid")
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn id(&self, code: &str) -> Option<LangId> {
        self.ids.get(code).copied()
    }

    pub fn code(&self, id: LangId) -> &str {
        &self.codes[id as usize]
    }

    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    pub fn all(&self) -> LangSet {
        LangSet::first_n(self.codes.len())
    }

    /// Builds the set of the given codes; unknown codes are an error.
    pub fn set_of<S: AsRef<str>>(&self, codes: impl IntoIterator<Item = S>) -> Result<LangSet, IndexError> {
        let mut set = LangSet::EMPTY;
        for code in codes {
            let id = self
                .id(code.as_ref())
                .ok_or_else(|| IndexError::InvalidLanguage(code.as_ref().to_owned()))?;
            set.insert(id);
        }
        Ok(set)
    }
}

/// Everything known about one linked entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRecord {
    qid: Qid,
    languages: LangSet,
    labels: Vec<(LangId, Box<str>)>,
}

impl EntityRecord {
    pub fn qid(&self) -> Qid {
        self.qid
    }

    /// Languages this entity has a label in.
    pub fn languages(&self) -> LangSet {
        self.languages
    }

    pub fn label(&self, lang: LangId) -> Option<&str> {
        self.labels
            .binary_search_by_key(&lang, |(l, _)| *l)
            .ok()
            .map(|i| &*self.labels[i].1)
    }

    pub fn labels(&self) -> impl Iterator<Item = (LangId, &str)> {
        self.labels.iter().map(|(l, s)| (*l, &**s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityIndex {
    languages: Languages,
    titles: HashMap<Box<str>, u32>,
    /// Sorted by qid.
    records: Vec<EntityRecord>,
}

impl EntityIndex {
    pub fn empty(languages: Languages) -> Self {
        Self {
            languages,
            titles: HashMap::new(),
            records: Vec::new(),
        }
    }

    pub fn languages(&self) -> &Languages {
        &self.languages
    }

    /// Number of indexed titles.
    pub fn len(&self) -> usize {
        self.titles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.titles.is_empty()
    }

    pub fn records(&self) -> &[EntityRecord] {
        &self.records
    }

    /// Indexed titles and the qid each resolves to, sorted by title.
    pub fn titles(&self) -> Vec<(&str, Qid)> {
        let mut out: Vec<_> = self
            .titles
            .iter()
            .map(|(t, &r)| (&**t, self.records[r as usize].qid))
            .collect();
        out.sort_unstable();
        out
    }

    /// Resolves a link target after title normalization. A miss is `None`.
    pub fn lookup(&self, title: &str) -> Option<&EntityRecord> {
        let key = normalize_title(title);
        self.titles.get(&*key).map(|&r| &self.records[r as usize])
    }

    pub fn record_by_qid(&self, qid: Qid) -> Option<&EntityRecord> {
        self.records
            .binary_search_by_key(&qid, |r| r.qid)
            .ok()
            .map(|i| &self.records[i])
    }

    /// Languages in which every title has a label. Any unresolvable title
    /// makes the result empty; no titles at all gives every target language.
    pub fn languages_covering<'t>(&self, titles: impl IntoIterator<Item = &'t str>) -> LangSet {
        let mut acc = self.languages.all();
        for title in titles {
            match self.lookup(title) {
                Some(rec) => acc = acc.intersect(rec.languages),
                None => return LangSet::EMPTY,
            }
            if acc.is_empty() {
                break;
            }
        }
        acc
    }

    pub fn language_codes(&self, set: LangSet) -> Vec<&str> {
        set.iter().map(|id| self.languages.code(id)).collect()
    }

    /// JSON-friendly dump of the full index.
    pub fn to_dump(&self) -> IndexDump {
        IndexDump {
            format: DUMP_FORMAT.into(),
            version: FORMAT_VERSION,
            languages: self.languages.codes.clone(),
            titles: self
                .titles()
                .into_iter()
                .map(|(t, q)| (t.to_owned(), q.to_string()))
                .collect(),
            labels: self
                .records
                .iter()
                .map(|r| {
                    let labels = r
                        .labels()
                        .map(|(l, s)| (self.languages.code(l).to_owned(), s.to_owned()))
                        .collect();
                    (r.qid.to_string(), labels)
                })
                .collect(),
        }
    }

    /// Rebuilds an index from its dump through the regular builder.
    pub fn from_dump(dump: &IndexDump) -> Result<(Self, BuildCounters), IndexError> {
        if dump.format != DUMP_FORMAT {
            return Err(IndexError::Format(format!("unexpected dump format {:?}", dump.format)));
        }
        if dump.version != FORMAT_VERSION {
            return Err(IndexError::UnsupportedVersion(dump.version));
        }
        let languages = Languages::new(&dump.languages)?;
        let sitelinks = dump.titles.iter().map(|(t, q)| (t.as_str(), q.as_str()));
        let labels = dump
            .labels
            .iter()
            .flat_map(|(q, ls)| ls.iter().map(move |(l, s)| (q.as_str(), l.as_str(), s.as_str())));
        Ok(build_index(sitelinks, labels, languages))
    }
}

const DUMP_FORMAT: &str = "entitycs-index";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexDump {
    pub format: String,
    pub version: u32,
    pub languages: Vec<String>,
    pub titles: BTreeMap<String, String>,
    pub labels: BTreeMap<String, BTreeMap<String, String>>,
}

/// Counters describing one index build.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildCounters {
    pub sitelinks: u64,
    pub malformed_sitelinks: u64,
    pub duplicate_titles: u64,
    pub labels: u64,
    pub malformed_labels: u64,
    pub non_target_labels: u64,
    pub orphan_labels: u64,
    pub duplicate_labels: u64,
    pub escaped_indicators: u64,
}

/// Incremental index construction. All sitelinks must be added before the
/// first label so that labels of unreferenced items can be dropped early.
#[derive(Debug)]
pub struct IndexBuilder {
    languages: Languages,
    titles: HashMap<Box<str>, Qid>,
    referenced: Option<HashMap<Qid, BTreeMap<LangId, Box<str>>>>,
    counters: BuildCounters,
}

impl IndexBuilder {
    pub fn new(languages: Languages) -> Self {
        Self {
            languages,
            titles: HashMap::new(),
            referenced: None,
            counters: BuildCounters::default(),
        }
    }

    /// Later entries for the same normalized title replace earlier ones.
    pub fn add_sitelink(&mut self, title: &str, qid: &str) {
        debug_assert!(self.referenced.is_none(), "sitelink added after labels");
        self.counters.sitelinks += 1;
        let title = normalize_title(title);
        let Ok(qid) = qid.trim().parse::<Qid>() else {
            self.counters.malformed_sitelinks += 1;
            return;
        };
        if title.is_empty() {
            self.counters.malformed_sitelinks += 1;
            return;
        }
        if self.titles.insert(title.into_owned().into_boxed_str(), qid).is_some() {
            self.counters.duplicate_titles += 1;
        }
    }

    pub fn add_label(&mut self, qid: &str, lang: &str, label: &str) {
        let titles = &self.titles;
        let referenced = self
            .referenced
            .get_or_insert_with(|| titles.values().map(|&q| (q, BTreeMap::new())).collect());
        self.counters.labels += 1;
        let label = label.trim();
        let (Ok(qid), true, false) = (
            qid.trim().parse::<Qid>(),
            is_valid_language_code(lang),
            label.is_empty(),
        ) else {
            self.counters.malformed_labels += 1;
            return;
        };
        let Some(lang) = self.languages.id(lang) else {
            self.counters.non_target_labels += 1;
            return;
        };
        let Some(labels) = referenced.get_mut(&qid) else {
            self.counters.orphan_labels += 1;
            return;
        };
        let (label, escaped) = escape_indicators(label);
        self.counters.escaped_indicators += escaped as u64;
        if labels.insert(lang, label.into_owned().into_boxed_str()).is_some() {
            self.counters.duplicate_labels += 1;
        }
    }

    pub fn finish(self) -> (EntityIndex, BuildCounters) {
        let Self {
            languages,
            titles,
            referenced,
            counters,
        } = self;
        let mut labels = referenced.unwrap_or_else(|| titles.values().map(|&q| (q, BTreeMap::new())).collect());
        let mut qids: Vec<Qid> = labels.keys().copied().collect();
        qids.sort_unstable();
        let records: Vec<EntityRecord> = qids
            .iter()
            .map(|&qid| {
                let ls = labels.remove(&qid).unwrap_or_default();
                let mut set = LangSet::EMPTY;
                ls.keys().for_each(|&l| set.insert(l));
                EntityRecord {
                    qid,
                    languages: set,
                    labels: ls.into_iter().collect(),
                }
            })
            .collect();
        let titles = titles
            .into_iter()
            .map(|(t, q)| (t, qids.binary_search(&q).expect("every title qid has a record") as u32))
            .collect();
        (
            EntityIndex {
                languages,
                titles,
                records,
            },
            counters,
        )
    }
}

/// Builds an index from `(title, qid)` and `(qid, lang, label)` streams.
/// Labels outside the target languages are dropped; entities left without
/// any label are still indexed.
pub fn build_index<'a>(
    sitelinks: impl IntoIterator<Item = (&'a str, &'a str)>,
    labels: impl IntoIterator<Item = (&'a str, &'a str, &'a str)>,
    languages: Languages,
) -> (EntityIndex, BuildCounters) {
    let mut builder = IndexBuilder::new(languages);
    for (title, qid) in sitelinks {
        builder.add_sitelink(title, qid);
    }
    for (qid, lang, label) in labels {
        builder.add_label(qid, lang, label);
    }
    builder.finish()
}

/// Builds an index from the two TSV files. Rows with the wrong number of
/// columns count as malformed.
pub fn build_from_tsv(
    sitelinks: impl BufRead,
    labels: impl BufRead,
    languages: Languages,
) -> Result<(EntityIndex, BuildCounters), IndexError> {
    let mut builder = IndexBuilder::new(languages);
    for line in sitelinks.lines() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        match line.split_once('\t') {
            Some((title, qid)) if !qid.contains('\t') => builder.add_sitelink(title, qid),
            _ => {
                builder.counters.sitelinks += 1;
                builder.counters.malformed_sitelinks += 1;
            }
        }
    }
    for line in labels.lines() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut cols = line.splitn(3, '\t');
        match (cols.next(), cols.next(), cols.next()) {
            (Some(q), Some(l), Some(s)) => builder.add_label(q, l, s),
            _ => builder.add_label("", "", ""),
        }
    }
    Ok(builder.finish())
}
