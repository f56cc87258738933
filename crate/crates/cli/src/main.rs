//! `onsager-flux`: batch driver for the onsager-core experiments.
//!
//! Every command writes into one output directory together with the
//! effective configuration (`config.toml`). Exit status is 0 on success,
//! 2 on invalid input or configuration, 3 when a numerical identity or
//! stability assertion fails.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "onsager-flux", version, about = "Mollified energy-flux experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Global seed; overrides `seed` in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; falls back to ONSAGER_FLUX_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override a configuration leaf, e.g. `--set flux_sweep.eta=1.5`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Synthesize a field with a prescribed Hölder exponent.
    Synth,
    /// Integrate the periodic Navier–Stokes equations.
    Simulate,
    /// Check the mollifier estimates on a field.
    MollifyCheck,
    /// Flux terms over a range of scales.
    FluxSweep,
    /// Energy budget of a simulated run.
    Budget,
    /// Horizontal mollification and flux bounds on a channel field.
    ChannelCheck,
    /// Merge `flux-sweep` outputs into one table sorted by α.
    Report {
        /// Sweep directories; appended to `report.inputs`.
        dirs: Vec<PathBuf>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Assertion(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Assertion(m) => write!(f, "assertion failed: {m}"),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Assertion(_) => 3,
        }
    }
}

impl From<onsager_core::Error> for CliError {
    fn from(e: onsager_core::Error) -> Self {
        use onsager_core::Error as E;
        match e {
            E::Identity { .. } | E::Cfl { .. } => CliError::Assertion(e.to_string()),
            E::InvalidInput(m) => CliError::Validation(m),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("ONSAGER_FLUX_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Validation(format!("ONSAGER_FLUX_THREADS must be an integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = threads(cli.threads)? {
        if n == 0 {
            return Err(CliError::Validation("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    let mut cfg = config::load(cli.config.as_deref(), &cli.set)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = cli.out {
        cfg.out = Some(o);
    }
    let out = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("onsager-run"));
    std::fs::create_dir_all(&out)?;
    let echo = toml::to_string(&cfg).map_err(|e| CliError::Validation(e.to_string()))?;
    std::fs::write(out.join("config.toml"), echo)?;
    log::info!("writing to {}", out.display());
    match cli.command {
        Command::Synth => commands::synth(&cfg, &out),
        Command::Simulate => commands::simulate(&cfg, &out),
        Command::MollifyCheck => commands::mollify_check(&cfg, &out),
        Command::FluxSweep => commands::flux_sweep(&cfg, &out),
        Command::Budget => commands::budget(&cfg, &out),
        Command::ChannelCheck => commands::channel_check(&cfg, &out),
        Command::Report { dirs } => {
            let mut inputs = cfg.report.inputs.clone();
            inputs.extend(dirs);
            commands::report(&inputs, &out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("onsager-flux: {e}");
            ExitCode::from(e.code())
        }
    }
}
