//! `dtdf` command line front-end.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dtdf::config::{RunConfig, CONFIG_DIR_ENV};

/// Exit status for configuration errors.
pub const EXIT_CONFIG: u8 = 2;
/// Exit status for I/O and file format errors.
pub const EXIT_IO: u8 = 3;
/// Exit status for numerical validation failures.
pub const EXIT_NUMERIC: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "dtdf", version, about = "Narrowband pulse-pair discovery pipeline")]
pub struct Cli {
    /// TOML configuration, or any dtdf output carrying an embedded one.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Also write CSV series for plotting.
    #[arg(long, global = true)]
    pub emit_figures: bool,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write one IQ capture per receiver channel.
    Synth,
    /// Channelize IQ captures into four-hour event files.
    Detect {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Excise RFI from event files.
    Excise {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Find pulse pairs, anchors and associated pairs between two event files.
    Pairs { a: PathBuf, b: PathBuf },
    /// Likelihoods from configured cases, association reports and pair reports.
    Analyze { inputs: Vec<PathBuf> },
    /// Monte Carlo verification of the calibration and detection statistics.
    McVerify,
}

/// A failed numerical check; maps to [`EXIT_NUMERIC`].
#[derive(Debug)]
pub struct ValidationFailed(pub String);

impl std::fmt::Display for ValidationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "validation failed: {}", self.0)
    }
}

impl std::error::Error for ValidationFailed {}

fn resolve_config(cli: &Cli) -> dtdf::Result<RunConfig> {
    let dir = std::env::var_os(CONFIG_DIR_ENV).map(PathBuf::from);
    let path = match (&cli.config, &dir) {
        (Some(p), Some(d)) if p.is_relative() && !p.exists() => Some(d.join(p)),
        (Some(p), _) => Some(p.clone()),
        (None, Some(d)) if d.join("dtdf.toml").exists() => Some(d.join("dtdf.toml")),
        (None, _) => None,
    };
    let mut cfg = match path {
        Some(p) => RunConfig::load(&p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ValidationFailed>().is_some() {
        return EXIT_NUMERIC;
    }
    match err.downcast_ref::<dtdf::Error>() {
        Some(dtdf::Error::Config(_) | dtdf::Error::InvalidParameter(_)) => EXIT_CONFIG,
        Some(dtdf::Error::Io(_) | dtdf::Error::Format { .. } | dtdf::Error::Incompatible(_)) => EXIT_IO,
        Some(dtdf::Error::Clipping { .. }) => EXIT_NUMERIC,
        None if err.downcast_ref::<std::io::Error>().is_some() => EXIT_IO,
        None => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = resolve_config(&cli)
        .map_err(anyhow::Error::from)
        .and_then(|cfg| commands::run(&cli, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dtdf: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
