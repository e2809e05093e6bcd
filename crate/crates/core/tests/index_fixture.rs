//! Index construction over a synthetic 1k-row TSV fixture, compared with a
//! naive in-memory join.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use entitycs_core::kb::{build_from_tsv, EntityIndex, Languages};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TARGETS: &[&str] = &["de", "el", "fr", "ja", "sw"];
const OTHER: &[&str] = &["xx", "qq", "EN", "d"];

struct Fixture {
    sitelinks: String,
    labels: String,
}

fn title(rng: &mut ChaCha8Rng, n: u32) -> String {
    let base = format!("page number {n}");
    match rng.random_range(0..4) {
        0 => base.replace(' ', "_"),
        1 => {
            let mut c = base.chars();
            c.next().unwrap().to_uppercase().chain(c).collect()
        }
        _ => base,
    }
}

fn fixture() -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut sitelinks = String::new();
    for _ in 0..300 {
        let n = rng.random_range(0..250);
        let qid = match rng.random_range(0..30) {
            0 => format!("Q0{n}"),
            1 => format!("P{n}"),
            _ => format!("Q{}", rng.random_range(1..200)),
        };
        sitelinks += &format!("{}\t{qid}\n", title(&mut rng, n));
    }
    let mut labels = String::new();
    for _ in 0..700 {
        let q = rng.random_range(1..260);
        let lang = if rng.random_bool(0.9) {
            TARGETS.choose(&mut rng)
        } else {
            OTHER.choose(&mut rng)
        }
        .unwrap();
        let label = match rng.random_range(0..40) {
            0 => "  ".to_owned(),
            _ => format!("{lang} label {}", rng.random_range(0..5)),
        };
        labels += &format!("Q{q}\t{lang}\t{label}\n");
    }
    Fixture { sitelinks, labels }
}

fn canon(t: &str) -> String {
    let t = t.replace('_', " ");
    let mut c = t.chars();
    c.next()
        .map(|h| h.to_uppercase().chain(c).collect::<String>())
        .unwrap_or_default()
}

/// Title -> (qid, lang -> label), by direct hash-map arithmetic.
fn reference(f: &Fixture) -> BTreeMap<String, (String, BTreeMap<String, String>)> {
    let valid_qid = |q: &str| {
        q.len() > 1 && q.starts_with('Q') && !q[1..].starts_with('0') && q[1..].bytes().all(|b| b.is_ascii_digit())
    };
    let mut titles = HashMap::new();
    for line in f.sitelinks.lines() {
        let (t, q) = line.split_once('\t').unwrap();
        if valid_qid(q) {
            titles.insert(canon(t), q.to_owned());
        }
    }
    let mut labels: HashMap<String, BTreeMap<String, String>> = HashMap::new();
    for line in f.labels.lines() {
        let cols: Vec<&str> = line.splitn(3, '\t').collect();
        if TARGETS.contains(&cols[1]) && !cols[2].trim().is_empty() {
            labels
                .entry(cols[0].to_owned())
                .or_default()
                .insert(cols[1].to_owned(), cols[2].trim().to_owned());
        }
    }
    titles
        .into_iter()
        .map(|(t, q)| {
            let ls = labels.get(&q).cloned().unwrap_or_default();
            (t, (q, ls))
        })
        .collect()
}

fn contents(idx: &EntityIndex) -> BTreeMap<String, (String, BTreeMap<String, String>)> {
    idx.titles()
        .into_iter()
        .map(|(t, q)| {
            let rec = idx.record_by_qid(q).unwrap();
            let ls = rec
                .labels()
                .map(|(l, s)| (idx.languages().code(l).to_owned(), s.to_owned()))
                .collect();
            (t.to_owned(), (q.to_string(), ls))
        })
        .collect()
}

fn build(f: &Fixture) -> EntityIndex {
    build_from_tsv(
        f.sitelinks.as_bytes(),
        f.labels.as_bytes(),
        Languages::new(TARGETS).unwrap(),
    )
    .unwrap()
    .0
}

#[test]
fn build_equals_naive_join() {
    let f = fixture();
    assert_eq!(f.sitelinks.lines().count() + f.labels.lines().count(), 1000);
    let want = reference(&f);
    assert!(want.len() > 150);
    assert!(want.values().any(|(_, ls)| ls.is_empty()));
    assert_eq!(contents(&build(&f)), want);
}

#[test]
fn randomized_case_lookups_match_join() {
    let f = fixture();
    let idx = build(&f);
    let want = reference(&f);
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut hits = 0;
    for _ in 0..100 {
        let n = rng.random_range(0..300);
        let base = format!("page number {n}");
        // Only the first character is case-folded; any other change misses.
        let probe: String = base
            .chars()
            .enumerate()
            .map(|(i, c)| {
                if rng.random_bool(if i == 0 { 0.5 } else { 0.02 }) {
                    c.to_ascii_uppercase()
                } else {
                    c
                }
            })
            .collect::<String>()
            .replace(' ', if rng.random_bool(0.5) { "_" } else { " " });
        let expected = want.get(&canon(&probe)).map(|(q, _)| q.clone());
        let got = idx.lookup(&probe).map(|r| r.qid().to_string());
        assert_eq!(got, expected, "{probe}");
        hits += usize::from(got.is_some());
    }
    assert!(hits > 20);
}

#[test]
fn covering_equals_set_arithmetic() {
    let f = fixture();
    let idx = build(&f);
    let want = reference(&f);
    let titles: Vec<&String> = want.keys().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let mut draw: Vec<String> = (0..5).map(|_| titles.choose(&mut rng).unwrap().to_string()).collect();
        if rng.random_bool(0.1) {
            draw.push("No such page".into());
        }
        let expected = draw
            .iter()
            .map(|t| {
                want.get(t)
                    .map(|(_, ls)| ls.keys().cloned().collect::<BTreeSet<_>>())
                    .unwrap_or_default()
            })
            .reduce(|a, b| &a & &b)
            .unwrap();
        let got: BTreeSet<String> = idx
            .language_codes(idx.languages_covering(draw.iter().map(String::as_str)))
            .into_iter()
            .map(str::to_owned)
            .collect();
        assert_eq!(got, expected);
        // Monotone shrinking under added titles.
        for k in 1..draw.len() {
            let prefix = idx.languages_covering(draw[..k].iter().map(String::as_str));
            assert!(idx
                .languages_covering(draw.iter().map(String::as_str))
                .is_subset(&prefix));
        }
    }
}

#[test]
fn serialized_forms_reproduce_lookups() {
    let idx = build(&fixture());
    let bytes = idx.to_bytes();
    let from_bin = EntityIndex::from_bytes(&bytes).unwrap();
    assert_eq!(contents(&from_bin), contents(&idx));
    assert_eq!(from_bin.to_bytes(), bytes);
    let (from_dump, _) = EntityIndex::from_dump(&idx.to_dump()).unwrap();
    assert_eq!(contents(&from_dump), contents(&idx));
    assert_eq!(from_dump.to_bytes(), bytes);
}
