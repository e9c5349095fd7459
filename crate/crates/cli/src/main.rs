//! Pipeline runner for gaze-embedding zero-shot experiments.
//!
//! One declarative TOML configuration drives every stage; subcommands
//! materialize their outputs into self-describing run directories (a
//! configuration snapshot plus a SHA-256 digest manifest). Flags override
//! file values; `GAZE_ZSL_RUN_ROOT` overrides the configured run root and
//! is itself overridden by `--run-root`.
//!
//! Exit codes: 0 success, 1 a pipeline stage failed (stderr carries the
//! stage tag), 2 configuration or usage errors.

mod commands;
mod config;
mod data;
mod rundir;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{EmbeddingSource, RunConfig, RUN_ROOT_ENV};
use gaze_zsl::embed::{EncoderKind, Fusion};
use gaze_zsl::eval::AblationMode;
use gaze_zsl::Error;

#[derive(Parser)]
#[command(
    name = "gaze-zsl",
    version,
    about = "Zero-shot image classification from gaze embeddings"
)]
struct Cli {
    /// Configuration file; when omitted, run.toml is read if present.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Dataset root (overrides the configuration).
    #[arg(long, global = true, value_name = "DIR")]
    data_root: Option<PathBuf>,
    /// Run-directory root (overrides GAZE_ZSL_RUN_ROOT and the configuration).
    #[arg(long, global = true, value_name = "DIR")]
    run_root: Option<PathBuf>,
    /// Run directory name; defaults to the command name.
    #[arg(long, global = true, value_name = "NAME")]
    out: Option<String>,
    /// Worker threads, 0 meaning one per core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0, value_name = "N")]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset into the data root.
    Synth(SynthArgs),
    /// Detect fixations in every raw gaze log.
    Preprocess(PreprocessArgs),
    /// Build class embeddings from one side-information source.
    Embed(EmbedArgs),
    /// Train a compatibility model on every class.
    Train(TrainArgs),
    /// Zero-shot evaluation: disjoint splits, cross-validation, test accuracy.
    Eval(EvalArgs),
    /// Evaluate gaze degraded to bubble-like data.
    Ablate(AblateArgs),
    /// Score fixation-filter settings over a parameter grid.
    Sweep(SweepArgs),
    /// Summarize result records found under the run root.
    Report,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    images_per_class: Option<usize>,
    #[arg(long)]
    participants: Option<usize>,
    /// Gaze samples per stream.
    #[arg(long)]
    samples: Option<usize>,
    /// Class signal strength in [0, 1].
    #[arg(long)]
    signal: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PreprocessArgs {
    /// Dispersion threshold, in pixels.
    #[arg(long)]
    dispersion: Option<f64>,
    /// Minimum fixation duration, in milliseconds.
    #[arg(long)]
    min_duration: Option<f64>,
}

#[derive(Args)]
struct EmbedArgs {
    /// gaze, attributes, bow, random, central, saliency, bubbles,
    /// or gaze+attributes.
    #[arg(long, value_parser = parse_source_flag)]
    source: Option<EmbeddingSource>,
    /// histogram, grid, or sequence.
    #[arg(long, value_parser = config::parse_encoder)]
    encoder: Option<EncoderKind>,
    /// Feature columns, e.g. "xy,d,ang,pupil".
    #[arg(long)]
    mask: Option<String>,
    /// average, early, or late.
    #[arg(long, value_parser = config::parse_fusion)]
    fusion: Option<Fusion>,
    /// Sequence-encoder sample count; 0 = automatic.
    #[arg(long)]
    k: Option<usize>,
    /// Precomputed fixation file (from preprocess) instead of raw logs.
    #[arg(long, value_name = "FILE")]
    fixations: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Embedding file(s) from embed; repeat the flag for late fusion.
    #[arg(long, value_name = "FILE")]
    embeddings: Vec<PathBuf>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    /// Embedding file(s) from embed; repeat the flag for late fusion.
    #[arg(long, value_name = "FILE")]
    embeddings: Vec<PathBuf>,
    /// Number of disjoint-class splits.
    #[arg(long)]
    splits: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AblateArgs {
    /// same_images, same_locations_concat, same_locations_avg, or
    /// same_locations_rand; all four when omitted.
    #[arg(long, value_parser = config::parse_mode)]
    mode: Option<AblationMode>,
}

#[derive(Args)]
struct SweepArgs {
    /// Dispersion range "lo..hi", in pixels.
    #[arg(long, value_name = "RANGE")]
    ws: Option<String>,
    /// Minimum-duration range "lo..hi", in milliseconds.
    #[arg(long, value_name = "RANGE")]
    ts: Option<String>,
    /// Values per range.
    #[arg(long)]
    points: Option<usize>,
    /// Fixations sampled per stream for the probe.
    #[arg(long)]
    k: Option<usize>,
}

fn parse_source_flag(s: &str) -> Result<EmbeddingSource, String> {
    s.parse()
}

/// A failed invocation: configuration problems exit 2, stage failures 1.
enum Failure {
    Config(String),
    Stage(String),
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe closes (`gaze-zsl eval | head`)
    // instead of panicking on the failed write.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(message)) => {
            eprintln!("error[config]: {message}");
            ExitCode::from(2)
        }
        Err(Failure::Stage(message)) => {
            eprintln!("{message}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    }

    let mut config = config::load(cli.config.as_deref()).map_err(Failure::Config)?;
    if let Ok(root) = std::env::var(RUN_ROOT_ENV) {
        if !root.is_empty() {
            config.run_root = PathBuf::from(root);
        }
    }
    if let Some(root) = &cli.data_root {
        config.data_root.clone_from(root);
    }
    if let Some(root) = &cli.run_root {
        config.run_root.clone_from(root);
    }
    let out = cli.out.as_deref();

    match &cli.command {
        Command::Synth(args) => {
            merge_synth(&mut config, args);
            staged("synth", commands::cmd_synth(&config, out))
        }
        Command::Preprocess(args) => {
            if let Some(v) = args.dispersion {
                config.filter.dispersion = v;
            }
            if let Some(v) = args.min_duration {
                config.filter.min_duration_ms = v;
            }
            staged("preprocess", commands::cmd_preprocess(&config, out))
        }
        Command::Embed(args) => {
            merge_embed(&mut config, args);
            staged(
                "embed",
                commands::cmd_embed(&config, args.fixations.as_deref(), out),
            )
        }
        Command::Train(args) => {
            if let Some(v) = args.learning_rate {
                config.train.learning_rate = v;
            }
            if let Some(v) = args.epochs {
                config.train.epochs = v;
            }
            staged("train", commands::cmd_train(&config, &args.embeddings, out))
        }
        Command::Eval(args) => {
            if let Some(v) = args.splits {
                config.splits.count = v;
            }
            if let Some(v) = args.seed {
                config.splits.seed = v;
            }
            staged("eval", commands::cmd_eval(&config, &args.embeddings, out))
        }
        Command::Ablate(args) => {
            staged("ablate", commands::cmd_ablate(&config, args.mode, out))
        }
        Command::Sweep(args) => {
            if let Some(v) = &args.ws {
                config.sweep.dispersions.clone_from(v);
            }
            if let Some(v) = &args.ts {
                config.sweep.durations.clone_from(v);
            }
            if let Some(v) = args.points {
                config.sweep.points = v;
            }
            if let Some(v) = args.k {
                config.sweep.k = v;
            }
            let (dispersions, durations) =
                config.sweep.grids().map_err(Failure::Config)?;
            staged(
                "sweep",
                commands::cmd_sweep(&config, &dispersions, &durations, out),
            )
        }
        Command::Report => staged("report", commands::cmd_report(&config.run_root)),
    }
}

fn merge_synth(config: &mut RunConfig, args: &SynthArgs) {
    if let Some(v) = args.classes {
        config.synth.n_classes = v;
    }
    if let Some(v) = args.images_per_class {
        config.synth.images_per_class = v;
    }
    if let Some(v) = args.participants {
        config.synth.participants = v;
    }
    if let Some(v) = args.samples {
        config.synth.samples_per_stream = v;
    }
    if let Some(v) = args.signal {
        config.synth.class_signal_strength = v;
    }
    if let Some(v) = args.seed {
        config.synth.seed = v;
    }
}

fn merge_embed(config: &mut RunConfig, args: &EmbedArgs) {
    if let Some(v) = args.source {
        config.embedding.source = v;
    }
    if let Some(v) = args.encoder {
        config.embedding.encoder = v;
    }
    if let Some(v) = &args.mask {
        config.embedding.mask.clone_from(v);
    }
    if let Some(v) = args.fusion {
        config.embedding.fusion = v;
    }
    if let Some(v) = args.k {
        config.embedding.k = v;
    }
}

/// Maps a stage failure to exit-1 with an `error[stage]` tag. Errors the
/// command already staged keep their tag; anything else is tagged with
/// the command name.
fn staged(command: &'static str, result: gaze_zsl::Result<()>) -> Result<(), Failure> {
    result.map_err(|e| {
        Failure::Stage(match e {
            Error::Stage { stage, source } => format!("error[{stage}]: {source}"),
            other => format!("error[{command}]: {other}"),
        })
    })
}
