//! `sta-thermalizer`: synthesize and verify finite-time thermalization
//! schedules for a dephased harmonic oscillator.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sta_thermalizer::cli::{self, AxisRange, FileConfig, RunConfig};
use sta_thermalizer::stochastic::Unraveling;

#[derive(Parser)]
#[command(
    name = "sta-thermalizer",
    about = "Finite-time thermalization control for a dephased harmonic oscillator",
    version
)]
struct CliArgs {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct SharedFlags {
    /// Initial trap frequency
    #[arg(long, allow_negative_numbers = true)]
    omega0: Option<f64>,
    /// Initial inverse temperature
    #[arg(long, allow_negative_numbers = true)]
    beta0: Option<f64>,
    /// Final trap frequency
    #[arg(long, allow_negative_numbers = true)]
    omegaf: Option<f64>,
    /// Final inverse temperature
    #[arg(long, allow_negative_numbers = true)]
    betaf: Option<f64>,
    /// Protocol duration
    #[arg(long, allow_negative_numbers = true)]
    tf: Option<f64>,
    /// Grid resolution (rows for exports, steps for integration)
    #[arg(long)]
    steps: Option<usize>,
    /// Output CSV path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Spectral truncation for entropy diagnostics
    #[arg(long)]
    nmax: Option<usize>,
    /// JSON config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the control schedule and export it as CSV
    Synthesize(SharedFlags),
    /// Integrate the consistency equations along the schedule
    Propagate(SharedFlags),
    /// Verify the schedule against a stochastic trajectory ensemble
    Ensemble {
        #[command(flatten)]
        shared: SharedFlags,
        /// Number of trajectories
        #[arg(long)]
        ntraj: Option<usize>,
        /// Unraveling scheme: noise | measurement
        #[arg(long)]
        unraveling: Option<String>,
    },
    /// Sweep final endpoints over a grid
    Sweep {
        #[command(flatten)]
        shared: SharedFlags,
        /// Final-frequency axis as start:stop:count
        #[arg(long = "omegaf-range", allow_hyphen_values = true)]
        omegaf_range: Option<String>,
        /// Final-inverse-temperature axis as start:stop:count
        #[arg(long = "betaf-range", allow_hyphen_values = true)]
        betaf_range: Option<String>,
    },
    /// Run the numerical self-check battery
    Check(SharedFlags),
}

fn resolve(shared: &SharedFlags) -> Result<RunConfig, sta_thermalizer::Error> {
    let file = match &shared.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let defaults = RunConfig::default();
    Ok(RunConfig {
        omega0: shared.omega0.or(file.omega0).unwrap_or(defaults.omega0),
        beta0: shared.beta0.or(file.beta0).unwrap_or(defaults.beta0),
        omegaf: shared.omegaf.or(file.omegaf).unwrap_or(defaults.omegaf),
        betaf: shared.betaf.or(file.betaf).unwrap_or(defaults.betaf),
        tf: shared.tf.or(file.tf).unwrap_or(defaults.tf),
        steps: shared.steps.or(file.steps),
        out: shared.out.clone().or(file.out),
        seed: shared.seed.or(file.seed).unwrap_or(defaults.seed),
        workers: shared.workers.or(file.workers),
        ntraj: file.ntraj.unwrap_or(defaults.ntraj),
        unraveling: match file.unraveling.as_deref() {
            Some("measurement") => Unraveling::Measurement,
            _ => Unraveling::Noise,
        },
        nmax: shared.nmax.or(file.nmax).unwrap_or(defaults.nmax),
        omegaf_range: file.omegaf_range,
        betaf_range: file.betaf_range,
    })
}

fn parse_unraveling(text: &str) -> Result<Unraveling, sta_thermalizer::Error> {
    match text {
        "noise" => Ok(Unraveling::Noise),
        "measurement" => Ok(Unraveling::Measurement),
        other => Err(sta_thermalizer::Error::Domain(format!(
            "unraveling must be 'noise' or 'measurement', got {other:?}"
        ))),
    }
}

fn run() -> Result<(), sta_thermalizer::Error> {
    let args = match CliArgs::try_parse() {
        Ok(args) => args,
        Err(e) => {
            // help/version are successful exits; anything else is usage
            if e.use_stderr() {
                eprint!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    match args.command {
        Command::Synthesize(shared) => cli::run_synthesize(&resolve(&shared)?),
        Command::Propagate(shared) => cli::run_propagate(&resolve(&shared)?),
        Command::Ensemble { shared, ntraj, unraveling } => {
            let mut config = resolve(&shared)?;
            if let Some(n) = ntraj {
                config.ntraj = n;
            }
            if let Some(u) = unraveling.as_deref() {
                config.unraveling = parse_unraveling(u)?;
            }
            cli::run_ensemble(&config)
        }
        Command::Sweep { shared, omegaf_range, betaf_range } => {
            let mut config = resolve(&shared)?;
            if let Some(r) = omegaf_range.as_deref() {
                config.omegaf_range = Some(AxisRange::parse(r)?);
            }
            if let Some(r) = betaf_range.as_deref() {
                config.betaf_range = Some(AxisRange::parse(r)?);
            }
            cli::run_sweep(&config)
        }
        Command::Check(shared) => {
            let config = resolve(&shared)?;
            let failures = cli::run_check(&config)?;
            if failures > 0 {
                return Err(sta_thermalizer::Error::Numerical(format!(
                    "{failures} self-check(s) failed"
                )));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
