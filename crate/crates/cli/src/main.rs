use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use odcal_cli::commands::{self, Trend};
use odcal_cli::error::EXIT_RUNTIME;
use odcal_cli::{CliError, RunConfig};

/// Calibrate opinion dynamics models against an observed concern series.
#[derive(Parser)]
#[command(name = "odcal", version)]
struct Cli {
    /// Worker threads for replicate evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parameter schedule forward and write concern series.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// `period,param,value` schedule, e.g. a best_params.csv.
        #[arg(long)]
        params: PathBuf,
        /// Also write the per-period opinion profiles of replicate 0.
        #[arg(long)]
        snapshots: bool,
    },
    /// Calibrate one model, or a model x c_th x algorithm grid.
    Calibrate {
        #[command(flatten)]
        run: RunArgs,
        /// Enumerate the grid axes of the config (default 3 models x 3 thresholds).
        #[arg(long)]
        grid: bool,
    },
    /// Write a synthetic survey and target series.
    Synth {
        /// Respondents.
        #[arg(long)]
        n: usize,
        /// Fractions of respondents naming the topic first, second, third.
        #[arg(long, value_delimiter = ',', required = true)]
        proportions: Vec<f64>,
        /// Length of a generated oscillating target series.
        #[arg(long, conflicts_with = "trend", required_unless_present = "trend")]
        months: Option<usize>,
        /// First month label of a generated series.
        #[arg(long, default_value = "2023-01")]
        start: String,
        /// `period,proportion` file to use as the target series.
        #[arg(long)]
        trend: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config. Drawn from entropy when absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<(RunConfig, u64, PathBuf), CliError> {
        let config = RunConfig::load(&self.config)?;
        let seed = self.seed.or(config.seed).unwrap_or_else(rand::random);
        let out = self.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("results"));
        Ok((config, seed, out))
    }
}

fn init_threads(threads: Option<usize>) -> anyhow::Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("starting worker pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Simulate { run, params, snapshots } => {
            let (config, seed, out) = run.load()?;
            init_threads(cli.threads.or(config.threads))?;
            commands::simulate(&config, &params, seed, &out, snapshots, &mut stdout)?;
        }
        Command::Calibrate { run, grid } => {
            let (config, seed, out) = run.load()?;
            init_threads(cli.threads.or(config.threads))?;
            commands::calibrate(&config, seed, &out, grid, &mut stdout)?;
        }
        Command::Synth { n, proportions, months, start, trend, seed, out } => {
            init_threads(cli.threads)?;
            let proportions: [f64; 3] = proportions
                .try_into()
                .map_err(|_| CliError::Config("--proportions takes three values".into()))?;
            let trend = match (trend, months) {
                (Some(path), _) => Trend::File(path),
                (None, Some(months)) => Trend::Oscillating { months, start },
                (None, None) => unreachable!("clap requires --months or --trend"),
            };
            let seed = seed.unwrap_or_else(rand::random);
            commands::synth(n, proportions, &trend, seed, &out, &mut stdout)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err.downcast_ref::<CliError>().map_or(EXIT_RUNTIME, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
