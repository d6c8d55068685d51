use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adaptmc_cli::{Command, ConfigError, RunConfig, RunError};
use clap::{Parser, Subcommand};

/// Adaptive MCMC samplers and convergence diagnostics.
#[derive(Parser)]
#[command(name = "adaptmc", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Adaptive Metropolis
    RunAm(Args),
    /// Interacting tempering ladder
    RunIt(Args),
    /// Two-state toy chain with its exact marginal law
    Toy(Args),
    /// Diagnostic checks
    Diagnose(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the outputs; the file name of `output_path` is kept
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(cmd: Command, args: &Args) -> Result<(RunConfig, PathBuf), ConfigError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|source| ConfigError::Read { path: args.config.display().to_string(), source })?;
    let mut cfg = RunConfig::parse(&text)?;
    cfg.resolve_command(cmd)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let prefix = match &args.out {
        Some(dir) => {
            let name = Path::new(&cfg.output_path).file_name().unwrap_or_else(|| "run".as_ref());
            dir.join(name)
        }
        None => PathBuf::from(&cfg.output_path),
    };
    Ok((cfg, prefix))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (cmd, args) = match &cli.command {
        Sub::RunAm(a) => (Command::RunAm, a),
        Sub::RunIt(a) => (Command::RunIt, a),
        Sub::Toy(a) => (Command::Toy, a),
        Sub::Diagnose(a) => (Command::Diagnose, a),
    };
    let (cfg, prefix) = match load(cmd, args) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    match adaptmc_cli::run(&cfg, &prefix) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(RunError::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
