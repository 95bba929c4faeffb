//! `wavetrain`: trains a wave-scattering medium or a lossy photonic chip to
//! a target matrix and writes plot-ready CSV plus a JSON manifest.
//!
//! Exit status is 0 on success, 1 for configuration or I/O problems and 2 for
//! numerical failures (solver breakdown, divergence, failed gradient check).

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::RunConfig;
use run::{GradcheckFailed, GradcheckTarget};

#[derive(Parser, Debug)]
#[command(name = "wavetrain", version, about = "In-situ training of wave-based matrix multipliers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Overrides the `seed` key of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for independent replicates.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Adjoint training of the wavenumber map.
    TrainMedium {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Intensity-only training of the chip phases.
    TrainChip {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Adjoint gradients against finite differences.
    Gradcheck {
        #[arg(value_enum)]
        target: GradcheckTarget,
        /// Optional; built-in probe settings are used without it.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<GradcheckFailed>() {
            return EXIT_NUMERICAL;
        }
        if let Some(e) = cause.downcast_ref::<wavetrain::Error>() {
            return if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_CONFIG };
        }
    }
    EXIT_CONFIG
}

fn load(path: &std::path::Path, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::TrainMedium { config, out } => {
            let cfg = load(&config, cli.seed)?;
            run::train_medium_cmd(&cfg, &config, &out, cli.jobs)
        }
        Command::TrainChip { config, out } => {
            let cfg = load(&config, cli.seed)?;
            run::train_chip_cmd(&cfg, &config, &out, cli.jobs)
        }
        Command::Gradcheck { target, config } => {
            let mut cfg = match &config {
                Some(path) => load(path, cli.seed)?,
                None => RunConfig::parse("seed = 1")?,
            };
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            run::gradcheck_cmd(target, &cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
