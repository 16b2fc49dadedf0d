//! `specdesk` command-line front end.

mod commands;
mod config;
mod route;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use commands::{DecodeArgs, DistillArgs, SynthArgs};
use config::ConfigFile;

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  internal error
  2  usage error (unknown flag, bad flag value, missing --config)
  3  I/O error (missing or unwritable file)
  4  vocabulary mismatch between models
  5  malformed input file (model, vocabulary, corpus, config)
  6  invalid argument (temperature, K, budgets, weights, ...)
  7  language not recognized and no default drafter

Errors are printed to stderr as one line:
  error kind=<kind> code=<exit code> message=\"<json-escaped text>\"";

#[derive(Parser, Debug)]
#[command(name = "specdesk", version, about = "Speculative decoding workbench for n-gram models", after_help = EXIT_CODES)]
struct Cli {
    /// Seed for every random choice; falls back to `seed` in the config file, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Config file (`key = value` lines with `[section]` headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for parallel commands; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Vocabulary management.
    #[command(subcommand)]
    Vocab(VocabCmd),
    /// Train n-gram models.
    #[command(subcommand)]
    Train(TrainCmd),
    /// Build a drafter training corpus from target generations.
    Distill {
        #[arg(long)]
        target: PathBuf,
        /// TSV corpus whose prompts are the source texts.
        #[arg(long)]
        prompts: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = commands::default_temps())]
        temps: Vec<f64>,
        /// Samples per non-zero temperature.
        #[arg(long, default_value_t = 1)]
        samples: usize,
        #[arg(long, default_value_t = 128)]
        max_len: usize,
        /// Wrapper around the instruction; `{}` marks where it goes.
        #[arg(long)]
        template: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Speculative decoding of one prompt.
    Decode {
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        drafter: PathBuf,
        /// Prompt text, or `-` to read stdin.
        #[arg(long, allow_hyphen_values = true)]
        prompt: String,
        /// Sampling temperature; 0 is greedy.
        #[arg(long = "T", default_value_t = 0.0, allow_negative_numbers = true)]
        temperature: f64,
        /// Draft length per cycle.
        #[arg(long = "K", default_value_t = specdesk::specdec::DEFAULT_K)]
        k: usize,
        #[arg(long, default_value_t = 128)]
        max_new: usize,
        /// Print the run counters as a JSON line after the text.
        #[arg(long)]
        stats: bool,
    },
    /// Experiments; the experiment is described by --config.
    #[command(subcommand)]
    Bench(BenchCmd),
    /// Pick a drafter from a registry by the language of the text.
    Route {
        #[arg(long)]
        registry: PathBuf,
        /// Input text, or `-` to read stdin.
        #[arg(long, allow_hyphen_values = true)]
        text: String,
        /// Also print the drafter's model path, tab separated.
        #[arg(long)]
        show_path: bool,
    },
    /// Write a synthetic corpus.
    Synth {
        /// de-en, fr-en or ru-en.
        #[arg(long)]
        pair: String,
        #[arg(long, default_value_t = 1000)]
        records: usize,
        /// Store instruction prompts instead of bare source sentences.
        #[arg(long)]
        instruct: bool,
        /// Monolingual records of this many target-side sentences each.
        #[arg(long)]
        paragraphs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum VocabCmd {
    /// Collect the characters of one or more TSV corpora.
    Build {
        #[arg(long, num_args = 1.., required = true)]
        corpus: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum TrainCmd {
    /// Train from scratch.
    Pretrain {
        /// One or more TSV corpora, trained on in order.
        #[arg(long, num_args = 1.., required = true)]
        corpus: Vec<PathBuf>,
        /// Vocabulary file; built from the corpus when omitted.
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long, default_value_t = specdesk::ngram::DEFAULT_TARGET_ORDER)]
        order: usize,
        /// Add-k smoothing constant.
        #[arg(long, default_value_t = 0.05)]
        k: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Add weighted counts from a corpus to an existing model.
    Finetune {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        weight: f64,
        /// Use only the first N tokens of the corpus.
        #[arg(long)]
        max_tokens: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum BenchCmd {
    /// Drafters x corpora x temperatures x seeds.
    Grid {
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Drafter quality against finetuning token budget.
    Scaling {
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] specdesk::Error),
}

impl CliError {
    fn kind_and_code(&self) -> (&'static str, u8) {
        use specdesk::Error as E;
        match self {
            CliError::Usage(_) => ("usage", 2),
            CliError::Core(e) => match e {
                E::Io(_) => ("io", 3),
                E::VocabMismatch(_) => ("vocab_mismatch", 4),
                E::Malformed { .. } | E::VersionMismatch { .. } | E::CorruptSequence { .. } => ("malformed", 5),
                E::InvalidArgument(_) | E::InvalidDistribution(_) | E::ZeroMass | E::NoCycles => ("invalid_argument", 6),
                E::UnknownLanguage(_) => ("unknown_language", 7),
                _ => ("internal", 1),
            },
        }
    }
}

fn report(err: &CliError) -> ExitCode {
    let (kind, code) = err.kind_and_code();
    let message = serde_json::to_string(&err.to_string()).unwrap_or_else(|_| "\"\"".into());
    eprintln!("error kind={kind} code={code} message={message}");
    ExitCode::from(code)
}

fn load_config(cli: &Cli) -> Result<Option<ConfigFile>, CliError> {
    cli.config.as_deref().map(ConfigFile::load).transpose().map_err(CliError::from)
}

fn require_config(cfg: Option<ConfigFile>) -> Result<ConfigFile, CliError> {
    cfg.ok_or_else(|| CliError::Usage("bench commands need --config <file>".into()))
}

fn run(cli: Cli) -> Result<String, CliError> {
    if cli.jobs > 0 {
        // Only fails when a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global();
    }
    let cfg = load_config(&cli)?;
    let explicit_seed = match (cli.seed, &cfg) {
        (Some(s), _) => Some(s),
        (None, Some(c)) => c.top().get("seed").map(|_| c.top().parse_or("seed", 0u64)).transpose()?,
        (None, None) => None,
    };
    let seed = explicit_seed.unwrap_or(0);
    let out = match cli.command {
        Command::Vocab(VocabCmd::Build { corpus, out }) => commands::vocab_build(&corpus, &out)?,
        Command::Train(TrainCmd::Pretrain { corpus, vocab, order, k, out }) => {
            commands::train_pretrain(&corpus, vocab.as_deref(), order, k, &out)?
        }
        Command::Train(TrainCmd::Finetune { model, corpus, weight, max_tokens, out }) => {
            commands::train_finetune(&model, &corpus, weight, max_tokens, &out)?
        }
        Command::Distill { target, prompts, temps, samples, max_len, template, out } => commands::distill(DistillArgs {
            target: &target,
            prompts: &prompts,
            temps,
            samples,
            max_len,
            template,
            seed,
            out: &out,
        })?,
        Command::Decode { target, drafter, prompt, temperature, k, max_new, stats } => commands::decode(DecodeArgs {
            target: &target,
            drafter: &drafter,
            prompt: &prompt,
            temperature,
            k,
            max_new,
            seed,
            stats,
        })?,
        Command::Bench(BenchCmd::Grid { out_dir }) => {
            commands::bench_grid(&require_config(cfg)?, &out_dir, cli.jobs, explicit_seed)?
        }
        Command::Bench(BenchCmd::Scaling { out_dir }) => {
            commands::bench_scaling(&require_config(cfg)?, &out_dir, explicit_seed)?
        }
        Command::Route { registry, text, show_path } => commands::route(&registry, &text, show_path)?,
        Command::Synth { pair, records, instruct, paragraphs, out } => commands::synth(SynthArgs {
            pair: &pair,
            records,
            instruct,
            paragraphs,
            seed,
            out: &out,
        })?,
    };
    Ok(out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    return ExitCode::SUCCESS;
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = e.print();
                    return ExitCode::from(2);
                }
                _ => {
                    let detail = e.to_string();
                    let first = detail.lines().next().unwrap_or_default();
                    return report(&CliError::Usage(first.trim_start_matches("error: ").to_string()));
                }
            }
        }
    };
    match run(cli) {
        Ok(out) => {
            if !out.is_empty() {
                println!("{out}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => report(&e),
    }
}
