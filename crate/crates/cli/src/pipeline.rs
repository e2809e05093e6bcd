//! `pipeline`: the chained stages driven by a TOML file.
//!
//! ```toml
//! seed = 42
//! output = "out"              # relative paths resolve against this file
//! log_level = "warn"          # used when ENTITYCS_LOG is unset
//!
//! [extract]
//! input = "docs.jsonl"
//! max_words = 128
//!
//! [index]                     # either `path` to a built index, or the TSVs
//! sitelinks = "sitelinks.tsv"
//! labels = "labels.tsv"
//! languages = "de,el,fr"      # list file or comma list; default list if absent
//!
//! [generate]
//! max_cs = 5
//! emit_english = "always"     # or "fallback-only"
//! shard_by_lang = false
//!
//! [split]                     # optional
//! valid_per_lang = 100
//!
//! [mask]
//! strategy = "pep_ms+mlm"
//! entity_p = 0.5              # optional override
//! tokenizer = "toy"           # or "vocab" with `vocab = "vocab.txt"`
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use entitycs_core::{EmitEnglish, GenerationConfig, Strategy};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::args::PipelineArgs;
use crate::io::write_pretty_json;
use crate::manifest::Manifest;
use crate::stages::{self, ExtractSettings, GenerateSettings, MaskSettings, SplitSettings};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub log_level: Option<String>,
    pub extract: ExtractSection,
    pub index: IndexSection,
    #[serde(default)]
    pub generate: GenerateSection,
    pub split: Option<SplitSection>,
    pub mask: MaskSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractSection {
    pub input: PathBuf,
    pub max_words: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexSection {
    pub path: Option<PathBuf>,
    pub sitelinks: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub languages: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSection {
    pub max_cs: Option<usize>,
    pub emit_english: Option<EmitEnglish>,
    pub target_languages: Option<Vec<String>>,
    #[serde(default)]
    pub shard_by_lang: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    pub valid_per_lang: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskSection {
    pub strategy: String,
    pub entity_p: Option<f64>,
    pub non_entity_p: Option<f64>,
    #[serde(default = "default_tokenizer")]
    pub tokenizer: String,
    pub vocab: Option<PathBuf>,
}

fn default_tokenizer() -> String {
    "toy".into()
}

impl PipelineConfig {
    /// Reads the file and resolves its relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: PipelineConfig = toml::from_str(&text).with_context(|| format!("config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.extract.input);
        for p in [
            &mut cfg.index.path,
            &mut cfg.index.sitelinks,
            &mut cfg.index.labels,
            &mut cfg.mask.vocab,
            &mut cfg.output,
        ]
        .into_iter()
        .flatten()
        {
            rebase(p);
        }
        if let Some(langs) = &mut cfg.index.languages {
            let candidate = base.join(&*langs);
            if Path::new(langs).is_relative() && candidate.is_file() {
                *langs = candidate.to_string_lossy().into_owned();
            }
        }
        Ok(cfg)
    }

    /// Flags win over file values.
    pub fn apply_flags(&mut self, args: &PipelineArgs) {
        if let Some(o) = &args.output {
            self.output = Some(o.clone());
        }
        if let Some(s) = args.seed {
            self.seed = Some(s);
        }
        if let Some(m) = args.max_words {
            self.extract.max_words = Some(m);
        }
        if let Some(m) = args.max_cs {
            self.generate.max_cs = Some(m);
        }
        if let Some(e) = args.emit_english {
            self.generate.emit_english = Some(e.into());
        }
        if let Some(s) = &args.strategy {
            self.mask.strategy = s.clone();
        }
        if let Some(p) = args.entity_p {
            self.mask.entity_p = Some(p);
        }
        if let Some(p) = args.non_entity_p {
            self.mask.non_entity_p = Some(p);
        }
        if let Some(n) = args.valid_per_lang {
            self.split = Some(SplitSection { valid_per_lang: n });
        }
    }
}

/// Semantic configuration as recorded in the manifest; no paths.
#[derive(Serialize)]
struct Resolved<'a> {
    seed: u64,
    extract: &'a ExtractSettings,
    index_languages: Option<Vec<&'a str>>,
    generate: &'a GenerateSettings,
    split: Option<&'a SplitSettings>,
    mask: &'a MaskSettings,
}

pub fn run(cfg: &PipelineConfig) -> Result<()> {
    let Some(seed) = cfg.seed else {
        bail!("pipeline needs a seed: set `seed` in the config or pass --seed");
    };
    let Some(out_dir) = cfg.output.as_deref() else {
        bail!("pipeline needs an output directory: set `output` in the config or pass --output");
    };
    fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;

    let extract_settings = ExtractSettings {
        max_words: cfg
            .extract
            .max_words
            .unwrap_or(entitycs_core::extract::DEFAULT_MAX_WORDS),
    };
    let strategy: Strategy = cfg.mask.strategy.parse().map_err(anyhow::Error::msg)?;
    let (tok, tok_info) = stages::load_tokenizer(&cfg.mask.tokenizer, cfg.mask.vocab.as_deref())?;
    let mask_settings = MaskSettings {
        masking: stages::masking_config(strategy, cfg.mask.entity_p, cfg.mask.non_entity_p, tok.as_ref(), seed)?,
        tokenizer: tok_info,
    };
    let generate_settings = GenerateSettings {
        generation: GenerationConfig {
            max_cs_per_sentence: cfg.generate.max_cs.unwrap_or(entitycs_core::generate::DEFAULT_MAX_CS),
            rng_seed: seed,
            target_languages: cfg
                .generate
                .target_languages
                .as_ref()
                .map(|v| v.iter().cloned().collect()),
            emit_english: cfg.generate.emit_english.unwrap_or_default(),
        },
        shard_by_lang: cfg.generate.shard_by_lang,
    };
    let split_settings = cfg.split.as_ref().map(|s| SplitSettings {
        valid_per_lang: s.valid_per_lang,
        seed,
    });

    let mut inputs = vec![cfg.extract.input.clone()];
    log::info!("pipeline: extract");
    let sentences = out_dir.join("sentences.jsonl");
    let extract_counters = stages::extract(&cfg.extract.input, &sentences, &extract_settings)?;

    log::info!("pipeline: index");
    let (index, index_counters, built) = match (&cfg.index.path, &cfg.index.sitelinks, &cfg.index.labels) {
        (Some(path), None, None) => {
            inputs.push(path.clone());
            (stages::load_index(path)?, None, None)
        }
        (None, Some(sitelinks), Some(labels)) => {
            inputs.extend([sitelinks.clone(), labels.clone()]);
            let languages = stages::resolve_languages(cfg.index.languages.as_deref())?;
            let (index, counters) = stages::build_index(sitelinks, labels, languages)?;
            let path = out_dir.join("index.idx");
            stages::write_index(&index, &path)?;
            (index, Some(counters), Some(path))
        }
        _ => bail!("[index] needs either `path` or both `sitelinks` and `labels`"),
    };

    log::info!("pipeline: generate");
    let (generate_counters, instance_files) =
        stages::generate(std::slice::from_ref(&sentences), &index, &generate_settings, out_dir)?;

    let mut outputs = vec![sentences];
    outputs.extend(built);
    outputs.extend(instance_files.iter().cloned());

    let mut split_counters = None;
    let mask_jobs: Vec<(Vec<PathBuf>, PathBuf)> = match &split_settings {
        Some(settings) => {
            log::info!("pipeline: split");
            let (train, valid) = (out_dir.join("train.jsonl"), out_dir.join("valid.jsonl"));
            split_counters = Some(stages::split(&instance_files, settings, &train, &valid)?);
            outputs.extend([train.clone(), valid.clone()]);
            vec![
                (vec![train], out_dir.join("masked.train.jsonl")),
                (vec![valid], out_dir.join("masked.valid.jsonl")),
            ]
        }
        None => vec![(instance_files.clone(), out_dir.join("masked.jsonl"))],
    };

    log::info!("pipeline: mask");
    let mut mask_counters = Vec::new();
    for (sources, target) in &mask_jobs {
        mask_counters.push(stages::mask(
            sources,
            tok.as_ref(),
            &mask_settings.masking,
            target,
            None,
        )?);
        outputs.push(target.clone());
    }

    log::info!("pipeline: stats");
    let report = stages::stats(&instance_files)?;
    let stats_path = out_dir.join("stats.json");
    write_pretty_json(&stats_path, &report)?;
    outputs.push(stats_path);

    let resolved = Resolved {
        seed,
        extract: &extract_settings,
        index_languages: built_languages(&index, cfg.index.path.is_none()),
        generate: &generate_settings,
        split: split_settings.as_ref(),
        mask: &mask_settings,
    };
    let mut manifest = Manifest::new("pipeline", &resolved);
    for p in &inputs {
        manifest.input(p)?;
    }
    if let Some(vocab) = &cfg.mask.vocab {
        manifest.input(vocab)?;
    }
    for p in &outputs {
        manifest.output(p)?;
    }
    manifest.counters(&json!({
        "extract": extract_counters,
        "index": index_counters,
        "generate": generate_counters,
        "split": split_counters,
        "mask": mask_counters,
    }));
    manifest.write(&out_dir.join("manifest.json"))
}

fn built_languages(index: &entitycs_core::EntityIndex, built: bool) -> Option<Vec<&str>> {
    built.then(|| index.languages().codes().iter().map(String::as_str).collect())
}
