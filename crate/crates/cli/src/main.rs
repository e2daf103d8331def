use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use uavpl_cli::commands::{analyze, simulate, sweep, validate};
use uavpl_cli::{CliError, RunConfig};

#[derive(Parser)]
#[command(name = "uavpl", version, about = "Payload and point-of-interest placement analysis for multirotors")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Random seed, overrides `sim.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for sweeps and Monte Carlo runs.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Stability verdict, per-channel H2 and optimal placement.
    Analyze,
    /// Closed-loop trajectories for each model and placement.
    Simulate,
    /// H2 over the (z_pl, z_poi) grid and along the alpha grid.
    Sweep,
    /// Oracle checks with measured tolerances.
    Validate {
        #[arg(long, hide = true)]
        corrupt_p: bool,
    },
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &cli.out {
        config.output.dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        config.sim.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = load(cli)?;
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Run(e.to_string()))?;
    }
    let out = match cli.command {
        Command::Analyze => analyze::run(&config)?,
        Command::Simulate => simulate::run(&config)?,
        Command::Sweep => sweep::run(&config)?,
        Command::Validate { corrupt_p } => validate::run(&config, validate::Options { corrupt_p })?,
    };
    eprintln!("wrote {} files to {}", out.written.len(), out.path().display());
    Ok(())
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
