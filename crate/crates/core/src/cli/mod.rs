//! The `msr` command line: one TOML config file plus flag overrides.
//!
//! Every command writes its outputs and the effective configuration
//! (`config.toml`, defaults and flags applied) into the output directory.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{DataConfig, Paths, RunConfig, SynthConfig};

use crate::chart::ImageFormat;
use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_MISSING_FILE: i32 = 4;
pub const EXIT_BAD_DATA: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "msr", version, about = "Multi-scale chart CNNs for daily stock trend prediction")]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags mirroring config keys; each wins over the config file.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (`paths.output`).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Bars CSV file or directory (`paths.data`).
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Window length in days (`data.n`).
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Label horizon in trading days (`data.horizon`).
    #[arg(long, global = true)]
    pub horizon: Option<usize>,
    /// Replaces the seed list (`seeds`); repeat for several runs.
    #[arg(long, global = true)]
    pub seed: Vec<u64>,
    /// Regression loss weight (`model.lambda`).
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Entry probability threshold (`backtest.entry_threshold`).
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Round-trip transaction cost (`backtest.cost`).
    #[arg(long, global = true)]
    pub cost: Option<f64>,
    /// Maximum open positions (`backtest.max_positions`).
    #[arg(long, global = true)]
    pub max_positions: Option<usize>,
    /// Maximum training epochs (`train.max_epochs`).
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    /// Model variant (`model.kind`).
    #[arg(long, global = true)]
    pub model: Option<KindArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Msr,
    Smsfr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate bar CSVs and cache them as one canonical file.
    Ingest,
    /// Write a synthetic universe as a bars CSV.
    Synth {
        #[arg(long)]
        symbols: Option<usize>,
        #[arg(long)]
        days: Option<usize>,
    },
    /// Render the dated n-day chart (and optionally its sub-maps) ending on a date.
    Render {
        /// Defaults to the first symbol.
        #[arg(long)]
        symbol: Option<String>,
        /// Defaults to the last bar.
        #[arg(long)]
        date: Option<NaiveDate>,
        #[arg(long, default_value = "pgm", value_parser = parse_format)]
        format: ImageFormat,
        /// Also render the multi-scale sub-map images.
        #[arg(long)]
        submaps: bool,
    },
    /// Dump the multi-scale decomposition of one window as JSON.
    Decompose {
        #[arg(long)]
        symbol: Option<String>,
        #[arg(long)]
        date: Option<NaiveDate>,
    },
    /// Train one model per seed and summarize test PPV/NPV.
    Train,
    /// Score a checkpoint on one split and write its signals.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
    },
    /// Simulate trading from a signals CSV or from checkpoints.
    Backtest {
        #[arg(long, conflicts_with = "checkpoint")]
        signals: Option<PathBuf>,
        /// Repeat to average several runs.
        #[arg(long)]
        checkpoint: Vec<PathBuf>,
        /// `date,close` CSV of a benchmark index.
        #[arg(long)]
        index: Option<PathBuf>,
    },
    /// Finite-difference checks of every layer and both model graphs.
    Gradcheck,
}

fn parse_format(s: &str) -> std::result::Result<ImageFormat, String> {
    match s {
        "pgm" => Ok(ImageFormat::Pgm),
        "raw" => Ok(ImageFormat::Raw),
        _ => Err(format!("unknown image format `{s}` (expected pgm or raw)")),
    }
}

impl Overrides {
    /// Loads the config file (or defaults) and applies the flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.output {
            cfg.paths.output = p.clone();
        }
        if let Some(p) = &self.data {
            cfg.paths.data = Some(p.clone());
        }
        if let Some(n) = self.n {
            cfg.data.n = n;
        }
        if let Some(h) = self.horizon {
            cfg.data.horizon = h;
        }
        if !self.seed.is_empty() {
            cfg.seeds = self.seed.clone();
        }
        if let Some(l) = self.lambda {
            cfg.model.lambda = l;
        }
        if let Some(t) = self.threshold {
            cfg.backtest.entry_threshold = t;
        }
        if let Some(c) = self.cost {
            cfg.backtest.cost = c;
        }
        if let Some(m) = self.max_positions {
            cfg.backtest.max_positions = m;
        }
        if let Some(e) = self.epochs {
            cfg.train.max_epochs = e;
        }
        if let Some(k) = self.model {
            cfg.model.kind = match k {
                KindArg::Msr => crate::model::ModelKind::Msr,
                KindArg::Smsfr => crate::model::ModelKind::Smsfr,
            };
        }
        cfg.sync();
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => EXIT_MISSING_FILE,
        Error::Parse { .. } | Error::Duplicate { .. } | Error::Validation { .. } => EXIT_BAD_DATA,
        _ => EXIT_RUNTIME,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = cli.overrides.resolve()?;
    commands::execute(&cli.command, &cfg)
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status. Diagnostics go to stderr.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
