//! `dressgate` command-line harness.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dressgate::Protocol;

use config::RunConfig;
use output::Outputs;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] dressgate::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "dressgate", version, about = "Rydberg-dressing gate simulator")]
struct Cli {
    /// JSON run configuration; defaults to the Cs reference point.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `noise.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "ms")]
    protocol: Protocol,
    /// Overrides `noise.n_samples`.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Worker threads for ensemble runs.
    #[arg(long, global = true, env = "DRESSGATE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Light shifts and entangling energy against detuning, both branches.
    KappaScan {
        /// Lower detuning bound in units of Ω_max.
        #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
        delta_min: f64,
        /// Upper detuning bound in units of Ω_max.
        #[arg(long, default_value_t = 20.0, allow_hyphen_values = true)]
        delta_max: f64,
        #[arg(long, default_value_t = 401)]
        points: usize,
    },
    /// Calibrate the ramp hold for the chosen protocol.
    Calibrate,
    /// Noise-free gate report and population traces.
    Simulate {
        /// Schedule written by `calibrate`; calibrates in-process when absent.
        #[arg(long)]
        schedule: Option<PathBuf>,
    },
    /// Ensemble fidelity over the configured inhomogeneity grid.
    Sweep {
        #[arg(long)]
        schedule: Option<PathBuf>,
    },
    /// Dark-state population against relative momentum.
    BdCheck {
        /// Largest `k p_rel / m` in units of Ω_max.
        #[arg(long, default_value_t = 0.05)]
        p_rel_max: f64,
        #[arg(long, default_value_t = 6)]
        points: usize,
    },
    /// Print the JSON schema of the run configuration.
    Schema,
    /// Print the default run configuration.
    DefaultConfig,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("thread count must be >= 1".into()));
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut config = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.noise.seed = seed;
    }
    if let Some(n) = cli.samples {
        config.noise.n_samples = n;
    }
    if let Some(dir) = cli.out {
        config.output.dir = dir;
    }
    config.validate()?;

    let print = |value: serde_json::Value| -> Result<(), CliError> {
        let mut stdout = std::io::stdout().lock();
        writeln!(stdout, "{}", serde_json::to_string_pretty(&value)?)?;
        Ok(())
    };
    let outputs = || Outputs::new(config.output.dir.clone(), &config);
    let written = match cli.command {
        Command::Schema => return print(serde_json::to_value(schemars::schema_for!(RunConfig))?),
        Command::DefaultConfig => return print(serde_json::to_value(RunConfig::default())?),
        Command::KappaScan { delta_min, delta_max, points } => {
            vec![commands::kappa_scan(&config, &outputs()?, delta_min, delta_max, points)?]
        }
        Command::Calibrate => vec![commands::calibrate(&config, &outputs()?, cli.protocol)?],
        Command::Simulate { schedule } => {
            commands::simulate(&config, &outputs()?, cli.protocol, schedule.as_deref())?
        }
        Command::Sweep { schedule } => {
            vec![commands::run_sweep(&config, &outputs()?, cli.protocol, schedule.as_deref())?]
        }
        Command::BdCheck { p_rel_max, points } => vec![commands::bd_check(&config, &outputs()?, p_rel_max, points)?],
    };
    let mut stdout = std::io::stdout().lock();
    for path in written {
        writeln!(stdout, "{}", path.display())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dressgate: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
