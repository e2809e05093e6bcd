use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use entitycs_core::EmitEnglish;

#[derive(Debug, Parser)]
#[command(
    name = "entitycs",
    version,
    about = "Entity-level code-switched corpus construction and masking"
)]
pub struct Cli {
    /// Worker threads for per-record parallelism (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Wikilink-annotated documents to filtered, segmented sentences.
    Extract(ExtractArgs),
    /// Build the title -> entity -> label index from TSV files.
    Index(IndexArgs),
    /// Produce code-switched instances from extracted sentences.
    Generate(GenerateArgs),
    /// Tokenize and mask instances under one masking strategy.
    Mask(MaskArgs),
    /// Draw a smoothed language-sampling schedule.
    Sample(SampleArgs),
    /// Carve a per-language validation set out of instances.
    Split(SplitArgs),
    /// Corpus statistics over instance files.
    Stats(StatsArgs),
    /// extract -> index -> generate -> [split] -> mask -> stats from a TOML config.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = entitycs_core::extract::DEFAULT_MAX_WORDS)]
    pub max_words: usize,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long)]
    pub sitelinks: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Language-list file or comma-separated codes (default: shipped list).
    #[arg(long)]
    pub languages: Option<String>,
    #[arg(long)]
    pub output: PathBuf,
    /// Also write the index as JSON for inspection.
    #[arg(long)]
    pub json_dump: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EmitEnglishArg {
    Always,
    FallbackOnly,
}

impl From<EmitEnglishArg> for EmitEnglish {
    fn from(a: EmitEnglishArg) -> Self {
        match a {
            EmitEnglishArg::Always => EmitEnglish::Always,
            EmitEnglishArg::FallbackOnly => EmitEnglish::FallbackOnly,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Sentence JSONL file or a directory of them.
    #[arg(long)]
    pub sentences: PathBuf,
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long, default_value_t = entitycs_core::generate::DEFAULT_MAX_CS)]
    pub max_cs: usize,
    #[arg(long)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub output: PathBuf,
    /// One file per language instead of a single instances.jsonl.
    #[arg(long)]
    pub shard_by_lang: bool,
    #[arg(long, value_enum, default_value = "always")]
    pub emit_english: EmitEnglishArg,
    /// Restrict switching to these comma-separated languages.
    #[arg(long, value_delimiter = ',')]
    pub target_languages: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    /// Instance JSONL file or a directory of them.
    #[arg(long)]
    pub input: PathBuf,
    /// mlm, wep, pep_mrs, pep_ms, pep_m, or any of the last four with +mlm.
    #[arg(long)]
    pub strategy: String,
    /// Entity candidate-selection probability (default: the strategy's).
    #[arg(long)]
    pub entity_p: Option<f64>,
    /// Non-entity candidate-selection probability (default: the strategy's).
    #[arg(long)]
    pub non_entity_p: Option<f64>,
    #[arg(long)]
    pub seed: u64,
    /// `toy` or `vocab` (WordPiece over --vocab).
    #[arg(long, default_value = "toy")]
    pub tokenizer: String,
    /// Vocabulary file, one token per line.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
    /// Also write a readable rendering with masked positions as [MASK].
    #[arg(long)]
    pub text_output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// JSON object mapping language codes to instance counts.
    #[arg(long)]
    pub counts: PathBuf,
    #[arg(long, default_value_t = entitycs_core::sampling::DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub valid_per_lang: usize,
    #[arg(long)]
    pub seed: u64,
    /// Output directory for train.jsonl and valid.jsonl.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Instance JSONL file or a directory of them.
    #[arg(long)]
    pub input: PathBuf,
    /// Write the report here as well as to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Every flag overrides the corresponding config value.
#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_words: Option<usize>,
    #[arg(long)]
    pub max_cs: Option<usize>,
    #[arg(long, value_enum)]
    pub emit_english: Option<EmitEnglishArg>,
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub entity_p: Option<f64>,
    #[arg(long)]
    pub non_entity_p: Option<f64>,
    #[arg(long)]
    pub valid_per_lang: Option<usize>,
}
