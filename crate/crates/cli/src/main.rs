use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sbcpmu_cli::{
    characterize, profile_merge, profile_show, report, simulate, CharacterizeKind, CharacterizeOptions, CliError,
    SimulateOverrides, Switch,
};

/// Error model of a single-board-computer PMU acquisition chain.
#[derive(Parser)]
#[command(name = "sbcpmu", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo run of a scenario file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Output directory, overriding the one in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        compensate: Option<Switch>,
        #[arg(long, allow_negative_numbers = true)]
        temperature_c: Option<f64>,
    },
    /// Fit block parameters from measurement CSV files.
    Characterize {
        #[arg(value_enum)]
        kind: Kind,
        #[arg(long)]
        input: PathBuf,
        /// Write the result JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Profile file to update with the fitted parameters.
        #[arg(long)]
        merge_into: Option<PathBuf>,
        /// Counter reference frequency F_k.
        #[arg(long)]
        known_base_hz: Option<f64>,
        /// Nominal sampling rate whose period is counted.
        #[arg(long)]
        nominal_rate_hz: Option<f64>,
        /// Counts averaged into one ratio estimate.
        #[arg(long, default_value_t = 1000)]
        averages: usize,
        /// Line frequency used to express the frequency error.
        #[arg(long, default_value_t = 50.0)]
        frequency_hz: f64,
        /// Delay profile that becomes the chain's PLL model.
        #[arg(long)]
        select_profile: Option<String>,
        /// Divide variances by n instead of n - 1.
        #[arg(long)]
        population_variance: bool,
    },
    /// Compare a run directory against the TVE and FE limits.
    Report { dir: PathBuf },
    /// Inspect or update chain profiles.
    Profile {
        #[command(subcommand)]
        action: ProfileAction,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Sweep,
    Counter,
    Delay,
}

#[derive(Subcommand)]
enum ProfileAction {
    /// Print a profile (`bundled:sbc-pmu-paper` or a file).
    Show {
        #[arg(default_value = "bundled:sbc-pmu-paper")]
        profile: String,
    },
    /// Merge a JSON fragment into a profile.
    Merge {
        profile: String,
        fragment: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            trials,
            out,
            compensate,
            temperature_c,
        } => {
            let overrides = SimulateOverrides {
                seed,
                trials,
                out,
                compensate,
                temperature_c,
            };
            let dir = simulate(&config, &overrides)?;
            println!("wrote {}", dir.display());
        }
        Command::Characterize {
            kind,
            input,
            out,
            merge_into,
            known_base_hz,
            nominal_rate_hz,
            averages,
            frequency_hz,
            select_profile,
            population_variance,
        } => {
            let printed = out.is_none();
            let doc = characterize(&CharacterizeOptions {
                kind: match kind {
                    Kind::Sweep => CharacterizeKind::Sweep,
                    Kind::Counter => CharacterizeKind::Counter,
                    Kind::Delay => CharacterizeKind::Delay,
                },
                input,
                out,
                merge_into,
                known_base_hz,
                nominal_rate_hz,
                averages,
                frequency_hz,
                select_profile,
                population_variance,
            })?;
            if printed {
                print!("{doc}");
            }
        }
        Command::Report { dir } => print!("{}", report(&dir)?),
        Command::Profile { action } => match action {
            ProfileAction::Show { profile } => print!("{}", profile_show(&profile)?),
            ProfileAction::Merge { profile, fragment, out } => {
                let merged = profile_merge(&profile, &fragment)?;
                match out {
                    Some(p) => std::fs::write(&p, merged).map_err(|e| CliError::io(format!("{}: {e}", p.display())))?,
                    None => print!("{merged}"),
                }
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { sbcpmu_cli::EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
