//! Command-line front end of the chemlm toolkit. `run` is the whole
//! program minus process setup, so tests can drive it in-process.

mod commands;
pub mod config;
pub mod manifest;
pub mod options;

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

pub use manifest::{FileDigest, RunManifest};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config keys or option values.
    #[error("{0}")]
    Usage(String),
    /// Unreadable, malformed or inconsistent input data.
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "chemlm", version, about = "Chemical language models for de novo molecular design")]
pub struct Cli {
    /// Seed for every random choice of the command (overrides config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for outputs and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// TOML file with one table per subcommand, e.g. [train].
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Canonicalise a SMILES corpus.
    Canon(CanonArgs),
    /// Build the symbol vocabulary of a corpus.
    Vocab(VocabArgs),
    /// Train a language model from scratch.
    Train(TrainArgs),
    /// Fine-tune a trained model on a small corpus.
    Finetune(FinetuneArgs),
    /// Sample SMILES from a model.
    Sample(SampleArgs),
    /// Export fingerprint or descriptor tables.
    Fp(FpArgs),
    /// Fit the activity classifier on measured activities.
    #[command(name = "tpm-fit")]
    TpmFit(TpmFitArgs),
    /// Score molecules with a fitted classifier.
    #[command(name = "tpm-predict")]
    TpmPredict(TpmPredictArgs),
    /// Split a corpus into disjoint train and test sets.
    Split(SplitArgs),
    /// Library statistics, reproduction, enrichment and histograms.
    Eval(EvalArgs),
    /// Run the generate, score, fine-tune design cycle.
    Cycle(CycleArgs),
    /// Fine-tune and sample after every epoch.
    Sweep(SweepArgs),
    /// Write a synthetic corpus with a planted motif.
    Synth(SynthArgs),
    /// Re-run a recorded manifest and compare outputs.
    Replay(ReplayArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct CanonArgs {
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    dedup: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    skip_invalid: Option<bool>,
}

#[derive(Debug, Args, Serialize)]
pub struct VocabArgs {
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    corpus: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    unroll: Option<usize>,
    #[arg(long)]
    clip: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct FinetuneArgs {
    #[arg(long)]
    base: Option<String>,
    #[arg(long)]
    corpus: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    unroll: Option<usize>,
    #[arg(long)]
    clip: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    symbols: Option<usize>,
    #[arg(long)]
    molecules: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    /// eol or random_symbol.
    #[arg(long)]
    seed_policy: Option<String>,
    #[arg(long)]
    max_line_symbols: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct FpArgs {
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// ecfp or descriptors.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    radius: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct TpmFitArgs {
    #[arg(long)]
    activities: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    measure: Option<String>,
    #[arg(long)]
    cutoff: Option<f64>,
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    radius: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    cv_folds: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct TpmPredictArgs {
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct SplitArgs {
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    train_out: Option<String>,
    #[arg(long)]
    test_out: Option<String>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    train_count: Option<usize>,
    #[arg(long)]
    test_count: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    dedup: Option<bool>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    generated: Option<String>,
    #[arg(long)]
    training: Option<String>,
    #[arg(long)]
    test: Option<String>,
    #[arg(long)]
    random: Option<String>,
    #[arg(long)]
    reference: Option<String>,
    #[arg(long)]
    bin_width: Option<f64>,
    #[arg(long)]
    radius: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    similarity_csv: Option<String>,
    #[arg(long)]
    edit_distance_csv: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct CycleArgs {
    #[arg(long)]
    base: Option<String>,
    #[arg(long)]
    tpm: Option<String>,
    #[arg(long)]
    state_dir: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    pool_out: Option<String>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    sample_symbols: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    unroll: Option<usize>,
    #[arg(long)]
    clip: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    base: Option<String>,
    #[arg(long)]
    actives: Option<String>,
    #[arg(long)]
    tpm: Option<String>,
    #[arg(long)]
    training: Option<String>,
    #[arg(long)]
    dir: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    sample_symbols: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    unroll: Option<usize>,
    #[arg(long)]
    clip: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    molecules: Option<usize>,
    #[arg(long)]
    motif_rate: Option<f64>,
    #[arg(long)]
    activities: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code: 0 success, 1 usage error, 2 data error.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    return 0;
                }
                _ => 1,
            };
            let _ = write!(stderr, "{e}");
            return code;
        }
    };
    init_logging(cli.verbose);
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    if let Some(n) = cli.threads {
        // The global pool can only be configured once per process; later
        // in-process runs keep the first setting.
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::debug!("thread pool already configured: {e}");
        }
    }
    let outcome = commands::execute(&cli, &argv, stdin, stdout);
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
