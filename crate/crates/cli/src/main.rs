use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mbl_cli::config::PipelineConfig;
use mbl_cli::pipeline;
use mbl_cli::CliError;

/// Many-body-localization pipeline: dataset generation, adversarial
/// training, prediction, and finite-size data collapse.
#[derive(Parser)]
#[command(name = "mbl", version)]
struct Cli {
    /// Pipeline configuration file.
    #[arg(long, global = true, default_value = "mbl.toml")]
    config: PathBuf,
    /// Worker thread count (overrides the config).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Regenerate artifacts even if they already exist.
    #[arg(long, global = true)]
    force: bool,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Produce the labeled and unlabeled eigenstate sets.
    Generate,
    /// Gap-ratio phase diagram (CSV + SVG heatmap).
    Baseline,
    /// Train one adversarial model per system size.
    Train,
    /// Average the trained classifier over disorder realizations.
    Predict,
    /// Finite-size collapse of the averaged curves.
    Collapse,
    /// Emit the report figures.
    Report,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = PipelineConfig::load(&cli.config)?;
    if let Some(w) = cli.workers {
        cfg.pipeline.workers = w;
    }
    if let Some(s) = cli.seed {
        cfg.pipeline.master_seed = s;
    }
    if let Some(out) = &cli.out {
        cfg.pipeline.out_dir = out.clone();
    }
    cfg.validate()?;
    match cli.command {
        Command::Generate => pipeline::cmd_generate(&cfg, cli.force),
        Command::Baseline => pipeline::cmd_baseline(&cfg, cli.force),
        Command::Train => pipeline::cmd_train(&cfg, cli.force),
        Command::Predict => pipeline::cmd_predict(&cfg, cli.force),
        Command::Collapse => pipeline::cmd_collapse(&cfg, cli.force),
        Command::Report => pipeline::cmd_report(&cfg, cli.force),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
