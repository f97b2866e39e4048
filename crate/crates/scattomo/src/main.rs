use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use scattomo::commands::{self, Check, Panel, RunContext};
use scattomo::config::{ExperimentConfig, DEFAULT_SEED};
use scattomo::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "scattomo", version, about = "Multiphoton scattering tomography experiments")]
struct Cli {
    /// JSON experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads.
    #[arg(long, global = true, env = "SCATTOMO_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate records for an oracle and reconstruct its scattering sectors.
    Reconstruct,
    /// Data for one panel of the scattering-matrix reconstruction figure.
    Figure3 {
        #[arg(long, value_enum)]
        panel: Panel,
    },
    /// σ-dependence of the measured nonlinearity.
    Scaling,
    /// Bias and spread of reconstructions under shot and detector noise.
    NoiseDemo,
    /// Excess error from sign, power and phase imperfections.
    Imperfections,
}

fn run(cli: Cli) -> Result<Vec<Check>, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let ctx = RunContext::new(cli.seed.or(config.seed).unwrap_or(DEFAULT_SEED), cli.out)?;
    Ok(match cli.command {
        Command::Reconstruct => commands::reconstruct(&config.reconstruct, &ctx)?.checks,
        Command::Figure3 { panel } => commands::figure3(panel, &config.figure3, &ctx)?.checks,
        Command::Scaling => commands::scaling(&config.scaling, &ctx)?.checks,
        Command::NoiseDemo => commands::noise_demo(&config.noise_demo, &ctx)?.checks,
        Command::Imperfections => commands::imperfections(&config.imperfections, &ctx)?.checks,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(checks) => {
            for c in &checks {
                let verdict = if c.passed { "pass" } else { "FAIL" };
                println!("{verdict}  {}: {:.6e} (expected {})", c.name, c.value, c.expected);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code().clamp(1, 255) as u8)
        }
    }
}

