use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cryptolex_core::discovery::{DEFAULT_ALPHA, DEFAULT_MIN_COUNT, DEFAULT_TOP_K};
use cryptolex_core::trajectory::DEFAULT_MIN_GAP_WEEKS;

/// Lexicon-driven analysis of in-group cryptolect usage in forum archives.
///
/// Inputs are JSON Lines post archives with `id`, `user`, `forum`,
/// `created_utc` and `text` fields. Data goes to stdout (or --output);
/// reports and progress go to stderr.
#[derive(Debug, Parser)]
#[command(name = "cryptolex", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inspect, validate and convert lexicon files.
    Lexicon {
        #[command(subcommand)]
        action: LexiconAction,
    },
    /// Annotate posts (or plain text lines) with lexicon matches.
    Annotate(AnnotateArgs),
    /// Write the canonical word or affix frequency table of a corpus.
    Freq(FreqArgs),
    /// Rank candidate in-group terms against a background corpus.
    Discover(DiscoverArgs),
    /// Weekly per-user usage rates and activity gaps.
    Trajectory(TrajectoryArgs),
}

#[derive(Debug, Subcommand)]
pub enum LexiconAction {
    /// Check entry invariants; exit 1 when any error is found.
    Validate(LexiconArgs),
    /// Category counts and percentages.
    Stats(LexiconArgs),
    /// Tab-separated export.
    Export(LexiconArgs),
    /// Convert an exported TSV back to JSON Lines.
    ImportTsv(ImportArgs),
    /// Convert a completed review sheet to JSON Lines.
    ImportSheet(ImportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct LexiconSource {
    /// Lexicon JSON Lines file [default: bundled seed lexicon]
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Blocklist file, one word per line [default: bundled blocklist]
    #[arg(long)]
    pub blocklist: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct LexiconArgs {
    #[command(flatten)]
    pub source: LexiconSource,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ImportArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    /// Post archive (JSON Lines); `-` reads stdin
    #[arg(long)]
    pub input: PathBuf,
    /// Abort on the first malformed line instead of skipping it
    #[arg(long)]
    pub strict: bool,
    /// Worker threads [default: available parallelism]
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Tsv,
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Args)]
pub struct AnnotateArgs {
    #[command(flatten)]
    pub scan: ScanArgs,
    #[command(flatten)]
    pub lexicon: LexiconSource,
    /// Treat each input line as raw text rather than a JSON post
    #[arg(long)]
    pub plain: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FreqArgs {
    #[command(flatten)]
    pub scan: ScanArgs,
    #[command(flatten)]
    pub lexicon: LexiconSource,
    /// Count productive affixes instead of word tokens
    #[arg(long)]
    pub affixes: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DiscoverArgs {
    #[command(flatten)]
    pub scan: ScanArgs,
    #[command(flatten)]
    pub lexicon: LexiconSource,
    /// Background corpus (JSON Lines)
    #[arg(long)]
    pub background: PathBuf,
    /// File of tokens to drop from the ranking
    #[arg(long)]
    pub stoplist: Option<PathBuf>,
    /// Additive smoothing, must be > 0
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Candidate window: most frequent target tokens
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    pub top_k: usize,
    #[arg(long, default_value_t = DEFAULT_MIN_COUNT)]
    pub min_count: u64,
    /// Rank productive affixes instead of words
    #[arg(long)]
    pub affixes: bool,
    /// Emit a blank coding sheet instead of the ranking
    #[arg(long)]
    pub sheet: bool,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    pub scan: ScanArgs,
    #[command(flatten)]
    pub lexicon: LexiconSource,
    #[arg(long, conflicts_with = "all", required_unless_present = "all")]
    pub user: Option<String>,
    /// Every user in the corpus
    #[arg(long)]
    pub all: bool,
    /// Report activity gaps instead of the weekly series
    #[arg(long)]
    pub gaps: bool,
    #[arg(long, default_value_t = DEFAULT_MIN_GAP_WEEKS)]
    pub min_gap_weeks: u32,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}
