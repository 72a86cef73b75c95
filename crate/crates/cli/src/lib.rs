//! Command-line front end: derive, infer, generate and benchmark.
//!
//! Exit codes are stable:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | usage error |
//! | 2 | input validation error |
//! | 3 | no compatible system found |
//! | 4 | time budget exhausted |

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use s0l::procgen::DatasetKind;
use s0l::scanner::ScanMode;

pub mod commands;
pub mod manifest;
pub mod report;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Usage = 1,
    Validation = 2,
    NoSolution = 3,
    Timeout = 4,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// A command that did not succeed: the exit code and what to tell the user.
#[derive(Debug)]
pub struct Failure {
    pub exit: Exit,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn validation(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            exit: Exit::Validation,
            error: error.into(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "s0l", version, about = "Infer stochastic L-systems from observed word sequences")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample derivations of a grammar and write them as sequence files.
    Derive(DeriveArgs),
    /// Search for the most probable system compatible with a sequence file.
    Infer(InferArgs),
    /// Write a benchmark dataset of generated systems and their sequences.
    Generate(GenerateArgs),
    /// Infer every case of a dataset and report accuracy against the originals.
    Benchmark(BenchmarkArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Plain,
    Pl,
}

impl From<ModeArg> for ScanMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Plain => ScanMode::Plain,
            ModeArg::Pl => ScanMode::PrefixLimited,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Es,
    Sga,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    #[value(name = "ds-pl")]
    DsPl,
    #[value(name = "ds-npl")]
    DsNpl,
    #[value(name = "ds-vm")]
    DsVm,
}

impl From<KindArg> for DatasetKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::DsPl => DatasetKind::PrefixFree,
            KindArg::DsNpl => DatasetKind::PrefixAllowed,
            KindArg::DsVm => DatasetKind::VaryingM,
        }
    }
}

fn duration(s: &str) -> Result<Duration, humantime::DurationError> {
    humantime::parse_duration(s)
}

#[derive(Debug, Args)]
pub struct DeriveArgs {
    /// Grammar file.
    #[arg(long)]
    pub grammar: PathBuf,
    /// Derivation steps; each sequence has steps + 1 words.
    #[arg(long)]
    pub steps: usize,
    /// Number of sequence files.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Sequences per file.
    #[arg(long, default_value_t = 1)]
    pub per_file: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; with --count > 1 files are numbered `<stem>-<i>.<ext>`.
    #[arg(long, short)]
    pub output: PathBuf,
}

/// Options shared by the commands that run a search.
#[derive(Clone, Debug, Args)]
pub struct SearchArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Pl)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = StrategyArg::Es)]
    pub strategy: StrategyArg,
    /// Wall-clock budget per search, e.g. `90s`, `10m`, `12h`.
    #[arg(long, value_parser = duration, default_value = "12h")]
    pub time_budget: Duration,
    /// Seed of the genetic algorithm.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Genetic algorithm population size.
    #[arg(long, default_value_t = 50)]
    pub population: usize,
    #[arg(long, default_value_t = 0.9)]
    pub crossover: f64,
    #[arg(long, default_value_t = 0.01)]
    pub mutation: f64,
    /// Vector entries that may be appended per rewritten word.
    #[arg(long, default_value_t = 1)]
    pub extension_limit: usize,
    /// Disable pruning of the exhaustive search.
    #[arg(long)]
    pub no_pruning: bool,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Sequence file.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Number of successor lengths in the search vector.
    #[arg(long)]
    pub n: usize,
    /// On no solution, retry with N + 1 up to this value.
    #[arg(long)]
    pub retry_n: Option<usize>,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Output grammar file.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Print each improvement to stderr.
    #[arg(long)]
    pub progress: bool,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Fraction of the full dataset size (60 systems per group).
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Words per sequence.
    #[arg(long, default_value_t = 5)]
    pub words: usize,
    /// Output directory.
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Dataset manifest written by `generate`.
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Cases processed concurrently.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Report file (CSV).
    #[arg(long, short)]
    pub output: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Exit::Usage.code() } else { Exit::Ok.code() };
        }
    };
    let outcome = match &cli.command {
        Command::Derive(a) => commands::derive(a),
        Command::Infer(a) => commands::infer(a),
        Command::Generate(a) => commands::generate(a),
        Command::Benchmark(a) => commands::benchmark(a),
    };
    match outcome {
        Ok(exit) => exit.code(),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.exit.code()
        }
    }
}
