//! Stage bodies shared by the single-stage subcommands and `pipeline`.
//! None of them writes a manifest; callers do.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use entitycs_core::extract::{ExtractCounters, Extractor, RawDocument};
use entitycs_core::generate::{GenerateError, StatsAccumulator, StatsReport};
use entitycs_core::kb::{build_from_tsv, BuildCounters, Languages};
use entitycs_core::masking::{
    mask_instance, render_text, MaskCounters, SubwordTokenizer, ToyTokenizer, VocabInfo, VocabTokenizer,
};
use entitycs_core::sampling::{carve_validation, compute_weights};
use entitycs_core::seed::seeded_rng;
use entitycs_core::{CsInstance, EntityIndex, GenerationConfig, Generator, MaskingConfig, SourceSentence, Strategy};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::failure::Internal;
use crate::io::{self, decode_batch, for_each_batch, write_json_line};

#[derive(Debug, Clone, Serialize)]
pub struct ExtractSettings {
    pub max_words: usize,
}

/// Documents that fail to decode or extract are logged, counted and skipped.
pub fn extract(input: &Path, output: &Path, settings: &ExtractSettings) -> Result<ExtractCounters> {
    let extractor = Extractor::new(settings.max_words);
    let mut out = io::create(output)?;
    let mut counters = ExtractCounters::default();
    let mut seen = HashSet::new();
    for_each_batch(&[input.to_path_buf()], |path, batch| {
        let results: Vec<_> = batch
            .into_par_iter()
            .map(|n| {
                let result = serde_json::from_str::<RawDocument>(&n.value)
                    .map_err(|e| format!("malformed document record: {e}"))
                    .and_then(|doc| {
                        extractor
                            .extract_document(&doc)
                            .map(|o| (doc.id, o))
                            .map_err(|e| e.to_string())
                    });
                (n.line, result)
            })
            .collect();
        for (line, result) in results {
            let failure = match result {
                Ok((id, doc_out)) if seen.insert(id.clone()) => {
                    counters += &doc_out.counters;
                    for s in &doc_out.sentences {
                        write_json_line(&mut out, s)?;
                    }
                    continue;
                }
                Ok((id, _)) => format!("duplicate document id {id:?}"),
                Err(msg) => msg,
            };
            log::warn!("extract: {}:{line}: {failure}", path.display());
            counters.documents += 1;
            counters.failed_documents += 1;
        }
        Ok(())
    })?;
    out.flush()?;
    Ok(counters)
}

/// A path to a language-list file, or a comma-separated list of codes.
/// `None` selects the shipped default list.
pub fn resolve_languages(spec: Option<&str>) -> Result<Languages> {
    let Some(spec) = spec else {
        return Ok(Languages::default_targets());
    };
    let path = Path::new(spec);
    let languages = if path.is_file() {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Languages::parse_list(&text).with_context(|| format!("language list {}", path.display()))?
    } else {
        Languages::new(spec.split(',').map(str::trim).filter(|c| !c.is_empty()))
            .with_context(|| format!("language list {spec:?} (neither a file nor a valid comma-separated list)"))?
    };
    if languages.is_empty() {
        bail!("language list {spec:?} is empty");
    }
    Ok(languages)
}

pub fn build_index(sitelinks: &Path, labels: &Path, languages: Languages) -> Result<(EntityIndex, BuildCounters)> {
    let (index, counters) =
        build_from_tsv(io::open(sitelinks)?, io::open(labels)?, languages).context("index build")?;
    if counters.malformed_sitelinks + counters.malformed_labels > 0 {
        log::warn!(
            "index: skipped {} malformed sitelink rows and {} malformed label rows",
            counters.malformed_sitelinks,
            counters.malformed_labels
        );
    }
    Ok((index, counters))
}

pub fn write_index(index: &EntityIndex, output: &Path) -> Result<()> {
    let mut out = io::create(output)?;
    index.write_binary(&mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_index(path: &Path) -> Result<EntityIndex> {
    let bytes = fs::read(path).with_context(|| format!("cannot read index {}", path.display()))?;
    EntityIndex::from_bytes(&bytes).with_context(|| format!("index {}", path.display()))
}

#[derive(Debug, Clone, Serialize)]
pub struct GenerateSettings {
    #[serde(flatten)]
    pub generation: GenerationConfig,
    pub shard_by_lang: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct GenerateCounters {
    pub sentences: u64,
    pub sentences_without_candidates: u64,
    pub sentences_capped: u64,
    pub english_instances: u64,
    pub switched_instances: u64,
}

enum InstanceSink {
    Single(PathBuf, BufWriter<File>),
    Sharded(PathBuf, BTreeMap<String, (PathBuf, BufWriter<File>)>),
}

impl InstanceSink {
    fn new(dir: &Path, sharded: bool) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(if sharded {
            InstanceSink::Sharded(dir.to_path_buf(), BTreeMap::new())
        } else {
            let path = dir.join("instances.jsonl");
            InstanceSink::Single(path.clone(), io::create(&path)?)
        })
    }

    fn write(&mut self, instance: &CsInstance) -> Result<()> {
        let out = match self {
            InstanceSink::Single(_, out) => out,
            InstanceSink::Sharded(dir, shards) => {
                if !shards.contains_key(&instance.language) {
                    let path = dir.join(format!("instances.{}.jsonl", instance.language));
                    let out = io::create(&path)?;
                    shards.insert(instance.language.clone(), (path, out));
                }
                &mut shards.get_mut(&instance.language).unwrap().1
            }
        };
        write_json_line(out, instance)
    }

    fn finish(self) -> Result<Vec<PathBuf>> {
        match self {
            InstanceSink::Single(path, mut out) => {
                out.flush()?;
                Ok(vec![path])
            }
            InstanceSink::Sharded(_, shards) => shards
                .into_values()
                .map(|(path, mut out)| {
                    out.flush()?;
                    Ok(path)
                })
                .collect(),
        }
    }
}

pub fn generate(
    inputs: &[PathBuf],
    index: &EntityIndex,
    settings: &GenerateSettings,
    out_dir: &Path,
) -> Result<(GenerateCounters, Vec<PathBuf>)> {
    let generator = Generator::new(index, settings.generation.clone()).context("generation config")?;
    let max = settings.generation.max_cs_per_sentence;
    let mut sink = InstanceSink::new(out_dir, settings.shard_by_lang)?;
    let mut counters = GenerateCounters::default();
    for_each_batch(inputs, |path, batch| {
        let sentences = decode_batch::<SourceSentence>(path, batch)?;
        let results: Vec<Result<(usize, Vec<CsInstance>)>> = sentences
            .into_par_iter()
            .map(|n| {
                let s = &n.value;
                s.validate(usize::MAX)
                    .map_err(|m| anyhow!("{}:{}: sentence {}: {m}", path.display(), n.line, s.sentence_id))?;
                let candidates = generator.candidate_languages(s).len();
                let instances = generator.generate(s).map_err(|e| match e {
                    GenerateError::MissingLabel { .. } => anyhow::Error::new(Internal(e.to_string())),
                    other => anyhow!(other),
                })?;
                Ok((candidates, instances))
            })
            .collect();
        for result in results {
            let (candidates, instances) = result?;
            counters.sentences += 1;
            counters.sentences_without_candidates += u64::from(candidates == 0);
            counters.sentences_capped += u64::from(candidates > max);
            for inst in &instances {
                if inst.language == entitycs_core::ENGLISH {
                    counters.english_instances += 1;
                } else {
                    counters.switched_instances += 1;
                }
                sink.write(inst)?;
            }
        }
        Ok(())
    })?;
    Ok((counters, sink.finish()?))
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitSettings {
    pub valid_per_lang: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct SplitCounts {
    pub train: u64,
    pub valid: u64,
}

#[derive(Deserialize)]
struct LanguageOnly {
    language: String,
}

/// Moves up to `valid_per_lang` instances of every language (English
/// included) to `valid`. Records are copied verbatim and both outputs keep
/// the input order.
pub fn split(
    inputs: &[PathBuf],
    settings: &SplitSettings,
    train: &Path,
    valid: &Path,
) -> Result<BTreeMap<String, SplitCounts>> {
    let mut lines = Vec::new();
    let mut by_language: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for_each_batch(inputs, |path, batch| {
        let languages: Vec<_> = batch
            .par_iter()
            .map(|n| {
                serde_json::from_str::<LanguageOnly>(&n.value)
                    .map(|r| r.language)
                    .with_context(|| format!("{}:{}: malformed instance record", path.display(), n.line))
            })
            .collect::<Result<_>>()?;
        for (n, lang) in batch.into_iter().zip(languages) {
            by_language.entry(lang).or_default().push(lines.len());
            lines.push(n.value);
        }
        Ok(())
    })?;
    let carved = carve_validation(by_language, settings.valid_per_lang, &mut seeded_rng(settings.seed));
    let mut in_valid = vec![false; lines.len()];
    let mut counts = BTreeMap::new();
    for (lang, positions) in &carved.valid {
        positions.iter().for_each(|&p| in_valid[p] = true);
        counts.insert(
            lang.clone(),
            SplitCounts {
                train: carved.train[lang].len() as u64,
                valid: positions.len() as u64,
            },
        );
    }
    let (mut train_out, mut valid_out) = (io::create(train)?, io::create(valid)?);
    for (line, is_valid) in lines.iter().zip(in_valid) {
        let out = if is_valid { &mut valid_out } else { &mut train_out };
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    train_out.flush()?;
    valid_out.flush()?;
    Ok(counts)
}

#[derive(Debug, Clone, Serialize)]
pub struct TokenizerInfo {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vocab_sha256: Option<String>,
}

pub fn load_tokenizer(kind: &str, vocab: Option<&Path>) -> Result<(Box<dyn SubwordTokenizer>, TokenizerInfo)> {
    match (kind, vocab) {
        ("toy", None) => Ok((
            Box::new(ToyTokenizer),
            TokenizerInfo {
                kind: "toy".into(),
                vocab_sha256: None,
            },
        )),
        ("toy", Some(_)) => bail!("--vocab is only valid with --tokenizer vocab"),
        ("vocab", Some(path)) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("cannot read vocabulary {}", path.display()))?;
            let tok =
                VocabTokenizer::from_vocab_text(&text).with_context(|| format!("vocabulary {}", path.display()))?;
            Ok((
                Box::new(tok),
                TokenizerInfo {
                    kind: "vocab".into(),
                    vocab_sha256: Some(io::sha256_bytes(text.as_bytes())),
                },
            ))
        }
        ("vocab", None) => bail!("--tokenizer vocab requires --vocab <file>"),
        (other, _) => bail!("unknown tokenizer {other:?} (expected toy or vocab)"),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MaskSettings {
    #[serde(flatten)]
    pub masking: MaskingConfig,
    pub tokenizer: TokenizerInfo,
}

/// Strategy defaults with optional probability overrides. Plain MLM has a
/// single rule, so `entity_p` applies to every subword there.
pub fn masking_config(
    strategy: Strategy,
    entity_p: Option<f64>,
    non_entity_p: Option<f64>,
    tok: &dyn SubwordTokenizer,
    seed: u64,
) -> Result<MaskingConfig> {
    let mut cfg = MaskingConfig::new(strategy, VocabInfo::of(tok), seed);
    if let Some(p) = entity_p {
        cfg.entity.p = p;
        if strategy == Strategy::Mlm {
            cfg.non_entity.p = p;
        }
    }
    if let Some(p) = non_entity_p {
        cfg.non_entity.p = p;
        if strategy == Strategy::Mlm {
            cfg.entity.p = p;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn mask(
    inputs: &[PathBuf],
    tok: &dyn SubwordTokenizer,
    cfg: &MaskingConfig,
    output: &Path,
    text_output: Option<&Path>,
) -> Result<MaskCounters> {
    let mut out = io::create(output)?;
    let mut text = text_output.map(io::create).transpose()?;
    let mut counters = MaskCounters::default();
    for_each_batch(inputs, |path, batch| {
        let instances = decode_batch::<CsInstance>(path, batch)?;
        let results: Vec<Result<_>> = instances
            .into_par_iter()
            .map(|n| {
                let (seq, record) = mask_instance(&n.value, tok, cfg)
                    .with_context(|| format!("{}:{}: cannot mask", path.display(), n.line))?;
                let rendered = text.is_some().then(|| render_text(&record, &seq, tok));
                Ok((seq, record, rendered))
            })
            .collect();
        for result in results {
            let (seq, record, rendered) = result?;
            counters.observe(&seq, &record, cfg.vocab.mask_id);
            write_json_line(&mut out, &record)?;
            if let (Some(t), Some(r)) = (text.as_mut(), rendered) {
                writeln!(t, "{}\t{r}", record.instance_id)?;
            }
        }
        Ok(())
    })?;
    out.flush()?;
    if let Some(t) = text.as_mut() {
        t.flush()?;
    }
    Ok(counters)
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleSettings {
    pub alpha: f64,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleCounters {
    pub probs: BTreeMap<String, f64>,
    pub drawn: BTreeMap<String, u64>,
}

/// Writes one sampled language per line.
pub fn sample(counts: &Path, settings: &SampleSettings, output: &Path) -> Result<SampleCounters> {
    let text = fs::read_to_string(counts).with_context(|| format!("cannot read counts {}", counts.display()))?;
    let counts: BTreeMap<String, u64> = serde_json::from_str(&text)
        .with_context(|| format!("{}: expected an object of language counts", counts.display()))?;
    let mut weights = compute_weights(&counts, settings.alpha)?;
    let mut rng = seeded_rng(settings.seed);
    let mut out = io::create(output)?;
    let mut drawn: BTreeMap<String, u64> = counts.keys().map(|k| (k.clone(), 0)).collect();
    for _ in 0..settings.n {
        let lang = weights.sample_language(&mut rng);
        writeln!(out, "{lang}")?;
        *drawn.get_mut(lang).unwrap() += 1;
    }
    out.flush()?;
    Ok(SampleCounters {
        probs: weights.probs.clone(),
        drawn,
    })
}

pub fn stats(inputs: &[PathBuf]) -> Result<StatsReport> {
    let mut acc = StatsAccumulator::default();
    for_each_batch(inputs, |path, batch| {
        for n in decode_batch::<CsInstance>(path, batch)? {
            acc.add(&n.value);
        }
        Ok(())
    })?;
    Ok(acc.finish())
}
