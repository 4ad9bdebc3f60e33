use clap::{Args, Parser, Subcommand};
use qline_cli::{cmd_distinguish, cmd_run, cmd_verify, load_config, CliError, Exit, Outcome};
use qline_core::analysis::Mutation;
use qline_core::LineConfig;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

/// Key establishment on a quantum line network: simulation, verification
/// and distinguisher experiments.
#[derive(Parser)]
#[command(name = "qline", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (TOML).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Writes records here instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads; more than one evaluates rounds and samples in parallel.
    #[arg(long, value_name = "N", default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the scheduled epochs and prints one record per epoch.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Checks the security lemmas and the resource invariants.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Injects a known defect (test hook).
        #[arg(long, value_name = "NAME")]
        mutate: Option<Mutation>,
    },
    /// Estimates distinguisher advantages between the real and ideal systems.
    Distinguish {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "N", default_value_t = 10_000)]
        samples: usize,
        /// `broken-simulator` swaps in a defective simulator.
        #[arg(long, value_name = "NAME")]
        mutate: Option<Mutation>,
    },
}

fn config(common: &Common, required: bool) -> Result<LineConfig, CliError> {
    match (&common.config, required) {
        (Some(path), _) => load_config(path, common.seed),
        (None, true) => Err(CliError::Usage("--config is required".into())),
        (None, false) => Ok(LineConfig::new(3, 1000, common.seed.unwrap_or(0))),
    }
}

fn emit(outcome: &Outcome, out: Option<&PathBuf>) -> Result<(), CliError> {
    let text = outcome.render();
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })
        }
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io { path: "stdout".into(), source }),
    }
}

fn execute(cli: Cli) -> Result<Outcome, CliError> {
    let common = match &cli.command {
        Command::Run { common } | Command::Verify { common, .. } | Command::Distinguish { common, .. } => common,
    };
    rayon::ThreadPoolBuilder::new().num_threads(common.jobs.max(1)).build_global().ok();
    let parallel = common.jobs > 1;
    let outcome = match &cli.command {
        Command::Run { common } => {
            let mut cfg = config(common, true)?;
            cfg.parallel |= parallel;
            cmd_run(&cfg)?
        }
        Command::Verify { common, mutate } => cmd_verify(&config(common, false)?, *mutate)?,
        Command::Distinguish { common, samples, mutate } => {
            cmd_distinguish(&config(common, true)?, *samples, *mutate, parallel)?
        }
    };
    emit(&outcome, common.out.as_ref())?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(outcome) => {
            match outcome.exit {
                Exit::AllAborted => eprintln!("qline: every epoch aborted"),
                Exit::VerificationFailed => eprintln!("qline: verification failed"),
                _ => {}
            }
            ExitCode::from(outcome.exit.code())
        }
        Err(e) => {
            eprintln!("qline: {e}");
            ExitCode::from(e.exit().code())
        }
    }
}
