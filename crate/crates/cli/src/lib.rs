//! `scarforge` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 invariant
//! violation found by `validate`.

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod embeddings;
mod validate;

pub use config::{resolve_config, SEED_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Debug)]
pub(crate) enum Failure {
    Usage(String),
    Data(String),
    Invariant(String),
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Data(_) => EXIT_DATA,
            Failure::Invariant(_) => EXIT_INVARIANT,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Data(m) => write!(f, "error: {m}"),
            Failure::Invariant(m) => write!(f, "invariant violated: {m}"),
        }
    }
}

impl From<scarforge_core::Error> for Failure {
    fn from(e: scarforge_core::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

pub(crate) type CmdResult = Result<(), Failure>;

#[derive(Debug, Parser)]
#[command(name = "scarforge", version, about = "Synthetic scar augmentation for LGE cardiac MRI datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Preprocess and orient every record; writes images, masks and a manifest.
    Preprocess(PreprocessArgs),
    /// Dump the AHA segment and wall layer maps of one record.
    Segments(SegmentsArgs),
    /// Run the augmentation pipeline and write a dataset.
    Synth(SynthArgs),
    /// Zero-shot decisions from precomputed embeddings.
    Score(ScoreArgs),
    /// Re-check every invariant of an emitted dataset.
    Validate(ValidateArgs),
    /// Write a manifest of annulus phantoms.
    #[command(hide = true)]
    Phantom(PhantomArgs),
}

#[derive(Debug, Args)]
struct PreprocessArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: u16,
}

#[derive(Debug, Args)]
struct SegmentsArgs {
    /// Zero-based line index into the manifest.
    #[arg(long)]
    record: usize,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub(crate) struct SynthArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// key = value file; see `SynthConfig::to_text` for the keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Master seed; overrides the environment and the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Regenerate from a previously emitted manifest instead of sampling.
    #[arg(long)]
    replay: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: u16,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long)]
    image_emb: PathBuf,
    #[arg(long)]
    text_emb: PathBuf,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value_t = 0.07)]
    tau: f64,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PhantomArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 12)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Parse `argv` (including the program name) and run the command.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Preprocess(a) => commands::preprocess(&a.manifest, &a.out, a.jobs.into()),
        Command::Segments(a) => commands::segments(a.record, &a.manifest, &a.out),
        Command::Synth(a) => commands::synth(&a),
        Command::Score(a) => embeddings::score(&a.image_emb, &a.text_emb, a.labels.as_deref(), a.tau),
        Command::Validate(a) => validate::validate(&a.out),
        Command::Phantom(a) => commands::phantom(&a.out, a.count, a.seed),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("{f}");
            f.exit_code()
        }
    }
}
