mod args;
mod failure;
mod io;
mod manifest;
mod pipeline;
mod stages;

use std::process::ExitCode;

#[global_allocator]
static ALLOCATOR: mimalloc::MiMalloc = mimalloc::MiMalloc;

use anyhow::{Context, Result};
use clap::Parser;
use entitycs_core::{GenerationConfig, Strategy};
use serde_json::json;

use args::{Cli, Command};
use manifest::{sidecar_path, Manifest};
use stages::{ExtractSettings, GenerateSettings, MaskSettings, SampleSettings, SplitSettings};

const LOG_ENV: &str = "ENTITYCS_LOG";

fn init_logging(default_level: &str) {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, default_level))
        .format_timestamp(None)
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pipeline_cfg = match &cli.command {
        Command::Pipeline(a) => match pipeline::PipelineConfig::load(&a.config) {
            Ok(mut cfg) => {
                cfg.apply_flags(a);
                Some(cfg)
            }
            Err(e) => {
                init_logging("warn");
                return report(e);
            }
        },
        _ => None,
    };
    init_logging(
        pipeline_cfg
            .as_ref()
            .and_then(|c| c.log_level.as_deref())
            .unwrap_or("warn"),
    );

    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            return report(anyhow::Error::new(e).context("thread pool"));
        }
    }
    let result = match (cli.command, pipeline_cfg) {
        (Command::Pipeline(_), Some(cfg)) => pipeline::run(&cfg).context("pipeline"),
        (command, _) => run(command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e),
    }
}

fn report(err: anyhow::Error) -> ExitCode {
    eprintln!("error: {err:#}");
    ExitCode::from(failure::exit_code(&err))
}

fn parse_strategy(name: &str) -> Result<Strategy> {
    name.parse().map_err(anyhow::Error::msg)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Extract(a) => {
            let settings = ExtractSettings { max_words: a.max_words };
            let counters = stages::extract(&a.input, &a.output, &settings).context("extract")?;
            let mut m = Manifest::new("extract", &settings);
            m.input(&a.input)?;
            m.output(&a.output)?;
            m.counters(&counters);
            m.write(&sidecar_path(&a.output))
        }
        Command::Index(a) => {
            let languages = stages::resolve_languages(a.languages.as_deref()).context("index")?;
            let (index, counters) = stages::build_index(&a.sitelinks, &a.labels, languages).context("index")?;
            stages::write_index(&index, &a.output)?;
            let mut m = Manifest::new("index", &json!({ "languages": index.languages().codes() }));
            m.input(&a.sitelinks)?;
            m.input(&a.labels)?;
            m.output(&a.output)?;
            if let Some(dump) = &a.json_dump {
                io::write_pretty_json(dump, &index.to_dump())?;
                m.output(dump)?;
            }
            m.counters(&json!({ "build": counters, "titles": index.titles().len(), "entities": index.len() }));
            m.write(&sidecar_path(&a.output))
        }
        Command::Generate(a) => {
            let index = stages::load_index(&a.index).context("generate")?;
            let inputs = io::jsonl_inputs(&a.sentences)?;
            let settings = GenerateSettings {
                generation: GenerationConfig {
                    max_cs_per_sentence: a.max_cs,
                    rng_seed: a.seed,
                    target_languages: a.target_languages.map(|v| v.into_iter().collect()),
                    emit_english: a.emit_english.into(),
                },
                shard_by_lang: a.shard_by_lang,
            };
            let (counters, files) = stages::generate(&inputs, &index, &settings, &a.output).context("generate")?;
            let mut m = Manifest::new("generate", &settings);
            for p in inputs.iter().chain([&a.index]) {
                m.input(p)?;
            }
            for p in &files {
                m.output(p)?;
            }
            m.counters(&counters);
            m.write(&a.output.join("manifest.json"))
        }
        Command::Mask(a) => {
            let strategy = parse_strategy(&a.strategy)?;
            let (tok, tokenizer) = stages::load_tokenizer(&a.tokenizer, a.vocab.as_deref())?;
            let masking = stages::masking_config(strategy, a.entity_p, a.non_entity_p, tok.as_ref(), a.seed)?;
            let inputs = io::jsonl_inputs(&a.input)?;
            let counters =
                stages::mask(&inputs, tok.as_ref(), &masking, &a.output, a.text_output.as_deref()).context("mask")?;
            let settings = MaskSettings { masking, tokenizer };
            let mut m = Manifest::new("mask", &settings);
            for p in inputs.iter().chain(a.vocab.as_ref()) {
                m.input(p)?;
            }
            m.output(&a.output)?;
            if let Some(t) = &a.text_output {
                m.output(t)?;
            }
            m.counters(&counters);
            m.write(&sidecar_path(&a.output))
        }
        Command::Sample(a) => {
            let settings = SampleSettings {
                alpha: a.alpha,
                n: a.n,
                seed: a.seed,
            };
            let counters = stages::sample(&a.counts, &settings, &a.output).context("sample")?;
            let mut m = Manifest::new("sample", &settings);
            m.input(&a.counts)?;
            m.output(&a.output)?;
            m.counters(&counters);
            m.write(&sidecar_path(&a.output))
        }
        Command::Split(a) => {
            let settings = SplitSettings {
                valid_per_lang: a.valid_per_lang,
                seed: a.seed,
            };
            let inputs = io::jsonl_inputs(&a.input)?;
            let (train, valid) = (a.output.join("train.jsonl"), a.output.join("valid.jsonl"));
            let counts = stages::split(&inputs, &settings, &train, &valid).context("split")?;
            let mut m = Manifest::new("split", &settings);
            for p in &inputs {
                m.input(p)?;
            }
            m.output(&train)?;
            m.output(&valid)?;
            m.counters(&counts);
            m.write(&a.output.join("manifest.json"))
        }
        Command::Stats(a) => {
            let inputs = io::jsonl_inputs(&a.input)?;
            let report = stages::stats(&inputs).context("stats")?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if let Some(out) = &a.output {
                io::write_pretty_json(out, &report)?;
                let mut m = Manifest::new("stats", &json!({}));
                for p in &inputs {
                    m.input(p)?;
                }
                m.output(out)?;
                m.write(&sidecar_path(out))?;
            }
            Ok(())
        }
        Command::Pipeline(_) => unreachable!("handled in main"),
    }
}
