//! Command-line front end: configuration, scenario commands and output.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::Error;
use commands::{CommandOutput, CHECKPOINTS, DEFAULT_TW_LIST};
use config::{ExperimentConfig, GateModelChoice};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "cat-aqec", version, about = "Cat-code error correction simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the seed from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Cavity truncation; overrides the config.
    #[arg(long, global = true)]
    pub fock_dim: Option<usize>,
    /// noiseless, suspended or active.
    #[arg(long, global = true)]
    pub gate_model: Option<GateModelChoice>,
    /// Repeat with fock_dim + 10 and compare headline metrics.
    #[arg(long, global = true)]
    pub check_convergence: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encoder and decoder infidelity.
    Encode,
    /// Correction infidelity.
    Correct,
    /// Repeated autonomous correction with lifetime fit.
    Aqec,
    /// Measurement-based correction on quantum trajectories.
    Mbqec {
        #[arg(long, default_value_t = 500)]
        trajectories: usize,
        /// Parity measurements per waiting interval.
        #[arg(long, default_value_t = 1)]
        measurements_per_correction: usize,
    },
    /// Lifetime as a function of the waiting time.
    SweepTw {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_TW_LIST)]
        tw: Vec<f64>,
    },
    /// Husimi-Q grids at pipeline checkpoints.
    PhasePortrait {
        #[arg(long, value_delimiter = ',', default_values_t = CHECKPOINTS.map(String::from))]
        checkpoints: Vec<String>,
    },
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::InvalidArgument(_) | Error::Truncation { .. } | Error::Io(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

/// Resolves the configuration from file and flag overrides.
pub fn resolve_config(cli: &Cli) -> crate::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::parse(&fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(n) = cli.fock_dim {
        cfg.fock_dim = n;
    }
    if let Some(g) = cli.gate_model {
        cfg.gate_model = g;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> crate::Result<CommandOutput> {
    let cfg = resolve_config(cli)?;
    let check = cli.check_convergence;
    let out = match &cli.command {
        Command::Encode => commands::with_convergence(&cfg, check, commands::cmd_encode_fidelity)?,
        Command::Correct => commands::with_convergence(&cfg, check, commands::cmd_correct_fidelity)?,
        Command::Aqec => commands::with_convergence(&cfg, check, commands::cmd_aqec)?,
        Command::Mbqec {
            trajectories,
            measurements_per_correction,
        } => commands::with_convergence(&cfg, check, |c| {
            commands::cmd_mbqec(c, *trajectories, *measurements_per_correction)
        })?,
        Command::SweepTw { tw } => commands::with_convergence(&cfg, check, |c| commands::cmd_sweep_tw(c, tw))?,
        Command::PhasePortrait { checkpoints } => {
            commands::with_convergence(&cfg, check, |c| commands::cmd_phase_portrait(c, checkpoints))?
        }
    };
    let mut files = out.files.clone();
    files.push((format!("{}_summary.json", out.summary.scenario), out.summary.to_json()));
    output::write_files(&cli.out, &files)?;
    Ok(out)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(out) => {
            println!("{}", out.summary.to_json());
            if out.summary.publishable {
                EXIT_OK
            } else {
                eprintln!("convergence check failed");
                EXIT_CONVERGENCE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
