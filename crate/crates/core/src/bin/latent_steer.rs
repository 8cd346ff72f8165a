//! Command-line entry point.
//!
//! `latent-steer <mode> --config <file> [--seed N] [--out DIR] [--strict]`
//! where mode is one of train, sweep, metrics, embed, assessor, synth,
//! gradcheck — plus `compare` for overlaying two sweep runs. The environment
//! variable `LATENT_STEER_THREADS` caps parallel evaluation width.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use latent_steer::pipeline::{compare_runs, run, Mode, RunConfig};

#[derive(Parser)]
#[command(name = "latent-steer", version, about = "Latent-space steering toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModeArgs {
    /// Run configuration JSON; defaults apply for absent fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Abort on the first malformed manifest line instead of warning.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train a direction model against the configured generator/assessor.
    Train(ModeArgs),
    /// Evaluate a trained model over the alpha grid.
    Sweep(ModeArgs),
    /// Compute image metrics for a manifest of images.
    Metrics(ModeArgs),
    /// PCA + t-SNE embedding of latent vectors.
    Embed(ModeArgs),
    /// Train the proxy-label assessor classifier.
    Assessor(ModeArgs),
    /// Generate the synthetic proxy dataset.
    Synth(ModeArgs),
    /// Gradient checks for the primitive set and the full loss stacks.
    Gradcheck(ModeArgs),
    /// Compare two sweep runs (identical grids required).
    Compare {
        /// Directory of the first sweep run.
        #[arg(long)]
        run_a: PathBuf,
        /// Directory of the second sweep run.
        #[arg(long)]
        run_b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(args: &ModeArgs, mode: Mode) -> Result<RunConfig, String> {
    let base = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            RunConfig::from_json(&text).map_err(|e| format!("bad config: {e}"))?
        }
        None => RunConfig::default(),
    };
    Ok(base.resolve(Some(mode), args.seed, args.out.clone(), args.strict))
}

fn execute(mode: Mode, args: &ModeArgs) -> Result<(), String> {
    let config = load_config(args, mode)?;
    let outcome = run(&config).map_err(|e| e.to_string())?;
    println!("{mode}: wrote {} files to {}", outcome.outputs.len(), outcome.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(args) => execute(Mode::Train, args),
        Command::Sweep(args) => execute(Mode::Sweep, args),
        Command::Metrics(args) => execute(Mode::Metrics, args),
        Command::Embed(args) => execute(Mode::Embed, args),
        Command::Assessor(args) => execute(Mode::Assessor, args),
        Command::Synth(args) => execute(Mode::Synth, args),
        Command::Gradcheck(args) => execute(Mode::Gradcheck, args),
        Command::Compare { run_a, run_b, out } => compare_runs(run_a, run_b, out)
            .map(|outcome| {
                println!(
                    "compare: wrote {} files to {}",
                    outcome.outputs.len(),
                    outcome.out_dir.display()
                );
            })
            .map_err(|e| e.to_string()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
