//! `umiclab` command-line front end.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Ctx;
use crate::config::FileConfig;
use crate::error::{Classify, CmdResult};

#[derive(Parser)]
#[command(
    name = "umiclab",
    version,
    about = "Train and evaluate an unreferenced image-caption metric"
)]
struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON configuration file; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for per-caption work (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory for outputs and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus (features and captions).
    Synth(commands::synth::Args),
    /// Build one negative bundle per caption.
    GenNegatives(commands::negatives::Args),
    /// Train the scorer on negative bundles.
    Train(commands::train::Args),
    /// Score captions with a trained checkpoint.
    Score(commands::score::Args),
    /// Score candidates with BLEU, ROUGE-L and CIDEr.
    Baselines(commands::baselines::Args),
    /// Correlate metric scores with human judgments.
    Eval(commands::eval::Args),
    /// Histograms of normalized human scores and rater agreement.
    ReportDist(commands::dist::Args),
}

fn run(cli: Cli) -> CmdResult<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .runtime()?;
    }
    std::fs::create_dir_all(&cli.out_dir)
        .map_err(|e| anyhow::anyhow!("cannot create output directory {}: {e}", cli.out_dir.display()))
        .input()?;
    let ctx = Ctx {
        seed: cli.seed,
        config: FileConfig::load(cli.config.as_deref())?,
        config_path: cli.config,
        out_dir: cli.out_dir,
    };
    match cli.command {
        Command::Synth(a) => commands::synth::run(&ctx, a),
        Command::GenNegatives(a) => commands::negatives::run(&ctx, a),
        Command::Train(a) => commands::train::run(&ctx, a),
        Command::Score(a) => commands::score::run(&ctx, a),
        Command::Baselines(a) => commands::baselines::run(&ctx, a),
        Command::Eval(a) => commands::eval::run(&ctx, a),
        Command::ReportDist(a) => commands::dist::run(&ctx, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error());
            failure.exit_code()
        }
    }
}
