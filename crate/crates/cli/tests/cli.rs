mod common;

use std::fs;
use std::path::Path;

use serde_json::Value;
use tempfile::TempDir;

use common::{entitycs, entitycs_ok, fixture_dir, read_jsonl, tree};

fn pipeline(out: &Path, extra: &[&str]) {
    let config = fixture_dir().join("pipeline.toml");
    let mut args = vec![
        "pipeline",
        "--config",
        config.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    entitycs_ok(args);
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn pipeline_matches_golden_outputs() {
    let dir = TempDir::new().unwrap();
    pipeline(dir.path(), &["--threads", "3"]);
    let golden = tree(&fixture_dir().join("golden"));
    let produced = tree(dir.path());
    let names = |t: &[(String, Vec<u8>)]| t.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
    assert_eq!(names(&produced), names(&golden));
    for ((name, got), (_, want)) in produced.iter().zip(&golden) {
        assert!(got == want, "{name} differs from golden");
    }
}

#[test]
fn config_hash_ignores_paths_and_threads() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("deep/b");
    pipeline(&a, &["--threads", "1"]);
    pipeline(&b, &["--threads", "4"]);
    assert_eq!(manifest(&a)["config_hash"], manifest(&b)["config_hash"]);

    for (k, flags) in [["--seed", "7"], ["--strategy", "wep"], ["--max-cs", "2"]]
        .iter()
        .enumerate()
    {
        let c = dir.path().join(format!("c{k}"));
        pipeline(&c, flags);
        assert_ne!(manifest(&a)["config_hash"], manifest(&c)["config_hash"], "{flags:?}");
    }
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    pipeline(
        dir.path(),
        &["--max-cs", "2", "--strategy", "wep", "--valid-per-lang", "3"],
    );
    let m = manifest(dir.path());
    assert_eq!(m["config"]["generate"]["max_cs_per_sentence"], 2);
    assert_eq!(m["config"]["mask"]["strategy"], "wep");
    assert_eq!(m["config"]["split"]["valid_per_lang"], 3);
    let stats: Value = serde_json::from_slice(&fs::read(dir.path().join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["max_cs_sentences_per_en_sentence"], 2);
    let valid = read_jsonl(&dir.path().join("valid.jsonl"));
    assert_eq!(valid.len(), 3 * stats["languages"].as_u64().unwrap() as usize);
    assert!(dir.path().join("masked.train.jsonl").is_file());
}

#[test]
fn missing_input_exits_with_input_error() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.jsonl");
    let out = entitycs([
        "extract",
        "--input",
        missing.to_str().unwrap(),
        "--output",
        dir.path().join("s.jsonl").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains(missing.to_str().unwrap()));
}

#[test]
fn malformed_instance_line_is_reported_with_location() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("bad.jsonl");
    fs::write(&input, "{\"instance_id\": 3}\n").unwrap();
    let out = entitycs(["stats", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.jsonl:1"));
}

#[test]
fn unknown_strategy_is_rejected() {
    let golden = fixture_dir().join("golden/instances.jsonl");
    let dir = TempDir::new().unwrap();
    let out = entitycs([
        "mask",
        "--input",
        golden.to_str().unwrap(),
        "--strategy",
        "pep_x",
        "--seed",
        "1",
        "--output",
        dir.path().join("m.jsonl").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn standalone_stages_chain() {
    let fx = fixture_dir();
    let dir = TempDir::new().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();

    entitycs_ok([
        "extract",
        "--input",
        fx.join("docs.jsonl").to_str().unwrap(),
        "--output",
        &p("s.jsonl"),
    ]);
    assert_eq!(
        fs::read(p("s.jsonl")).unwrap(),
        fs::read(fx.join("golden/sentences.jsonl")).unwrap()
    );
    assert!(dir.path().join("s.jsonl.manifest.json").is_file());

    entitycs_ok([
        "index",
        "--sitelinks",
        fx.join("sitelinks.tsv").to_str().unwrap(),
        "--labels",
        fx.join("labels.tsv").to_str().unwrap(),
        "--languages",
        "ar,de,el,es,fr,hi,ja,sw,zh",
        "--output",
        &p("kb.idx"),
        "--json-dump",
        &p("kb.json"),
    ]);
    assert_eq!(
        fs::read(p("kb.idx")).unwrap(),
        fs::read(fx.join("golden/index.idx")).unwrap()
    );
    let dump: Value = serde_json::from_slice(&fs::read(p("kb.json")).unwrap()).unwrap();
    assert_eq!(dump["titles"]["London"], "Q84");

    entitycs_ok([
        "generate",
        "--sentences",
        &p("s.jsonl"),
        "--index",
        &p("kb.idx"),
        "--seed",
        "20230201",
        "--output",
        &p("gen"),
    ]);
    assert_eq!(
        fs::read(p("gen/instances.jsonl")).unwrap(),
        fs::read(fx.join("golden/instances.jsonl")).unwrap()
    );

    entitycs_ok([
        "generate",
        "--sentences",
        &p("s.jsonl"),
        "--index",
        &p("kb.idx"),
        "--seed",
        "20230201",
        "--shard-by-lang",
        "--output",
        &p("shards"),
    ]);
    let mut sharded: Vec<String> = fs::read_dir(p("shards"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("instances."))
        .collect();
    sharded.sort();
    assert!(sharded.contains(&"instances.en.jsonl".to_owned()));
    let shard_total: usize = sharded
        .iter()
        .map(|n| read_jsonl(&dir.path().join("shards").join(n)).len())
        .sum();
    assert_eq!(shard_total, read_jsonl(&dir.path().join("gen/instances.jsonl")).len());
    for name in &sharded {
        let lang = name.trim_start_matches("instances.").trim_end_matches(".jsonl");
        assert!(read_jsonl(&dir.path().join("shards").join(name))
            .iter()
            .all(|i| i["language"] == lang));
    }

    entitycs_ok([
        "mask",
        "--input",
        &p("gen/instances.jsonl"),
        "--strategy",
        "pep_ms+mlm",
        "--entity-p",
        "0.5",
        "--seed",
        "20230201",
        "--output",
        &p("masked.jsonl"),
        "--text-output",
        &p("masked.txt"),
    ]);
    assert_eq!(
        fs::read(p("masked.jsonl")).unwrap(),
        fs::read(fx.join("golden/masked.jsonl")).unwrap()
    );
    let text = fs::read_to_string(p("masked.txt")).unwrap();
    assert_eq!(text.lines().count(), read_jsonl(&dir.path().join("masked.jsonl")).len());
    assert!(text.contains("[MASK]"));

    entitycs_ok([
        "split",
        "--input",
        &p("gen"),
        "--valid-per-lang",
        "2",
        "--seed",
        "3",
        "--output",
        &p("split"),
    ]);
    let train = read_jsonl(&dir.path().join("split/train.jsonl"));
    let valid = read_jsonl(&dir.path().join("split/valid.jsonl"));
    assert_eq!(
        train.len() + valid.len(),
        read_jsonl(&dir.path().join("gen/instances.jsonl")).len()
    );
    assert!(dir.path().join("split/manifest.json").is_file());

    let stats = entitycs_ok(["stats", "--input", &p("gen"), "--output", &p("stats.json")]);
    let printed: Value = serde_json::from_slice(&stats.stdout).unwrap();
    assert_eq!(
        fs::read(p("stats.json")).unwrap(),
        fs::read(fx.join("golden/stats.json")).unwrap()
    );
    assert_eq!(printed["languages"], 10);
}

#[test]
fn sample_writes_schedule_and_probabilities() {
    let dir = TempDir::new().unwrap();
    let counts = dir.path().join("counts.json");
    fs::write(&counts, r#"{"de": 100, "sw": 1}"#).unwrap();
    let out = dir.path().join("schedule.txt");
    let run = |seed: &str| {
        entitycs_ok([
            "sample",
            "--counts",
            counts.to_str().unwrap(),
            "--alpha",
            "0.5",
            "--n",
            "2000",
            "--seed",
            seed,
            "--output",
            out.to_str().unwrap(),
        ]);
        fs::read_to_string(&out).unwrap()
    };
    let first = run("9");
    assert_eq!(first, run("9"));
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(lines.len(), 2000);
    assert!(lines.iter().all(|l| *l == "de" || *l == "sw"));
    let m: Value = serde_json::from_slice(&fs::read(dir.path().join("schedule.txt.manifest.json")).unwrap()).unwrap();
    // 10 / (10 + 1) under square-root smoothing.
    let p_de = m["counters"]["probs"]["de"].as_f64().unwrap();
    assert!((p_de - 10.0 / 11.0).abs() < 1e-12);
    let de = lines.iter().filter(|l| **l == "de").count() as f64 / 2000.0;
    assert!((de - 10.0 / 11.0).abs() < 0.03, "{de}");
}
