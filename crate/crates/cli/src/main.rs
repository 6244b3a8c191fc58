//! `popgrid` command-line pipeline. Each subcommand reads CSV inputs,
//! runs one stage and writes CSV outputs with `.meta` sidecars.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use popgrid::dynamic::ActivityKind;
use popgrid::landuse::LandUse;
use popgrid::ErrorClass;

use config::PipelineConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] popgrid::Error),

    #[error("missing input: {what} (pass --{flag} or set inputs.{key} in --config)")]
    Missing {
        what: &'static str,
        flag: &'static str,
        key: &'static str,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e.class() {
                ErrorClass::Input => 1,
                ErrorClass::InsufficientData => 2,
                ErrorClass::Degenerate => 3,
            },
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "popgrid", version, about = "Population density estimation from mobile-network metadata")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Pipeline config (TOML); for `simulate`, the scenario file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "POPGRID_SEED")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    inputs: InputArgs,
}

#[derive(Debug, Args, Default)]
struct InputArgs {
    #[arg(long, global = true)]
    grid: Option<PathBuf>,
    #[arg(long, global = true)]
    admin: Option<PathBuf>,
    #[arg(long, global = true)]
    census: Option<PathBuf>,
    #[arg(long, global = true)]
    events: Option<PathBuf>,
    #[arg(long, global = true)]
    presence: Option<PathBuf>,
    #[arg(long, global = true)]
    volumes: Option<PathBuf>,
    #[arg(long, global = true)]
    labels: Option<PathBuf>,
    /// Characteristic land-use signatures.
    #[arg(long, global = true)]
    signatures: Option<PathBuf>,
    #[arg(long, global = true)]
    params: Option<PathBuf>,
    /// Event list: event_id,start_s,end_s,venue_cells.
    #[arg(long, global = true)]
    event_specs: Option<PathBuf>,
    #[arg(long, global = true)]
    truth: Option<PathBuf>,
    #[arg(long, global = true)]
    estimates: Option<PathBuf>,
    #[arg(long, global = true)]
    baseline: Option<PathBuf>,
    /// Filter settings (key = value lines).
    #[arg(long, global = true)]
    filter: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Census areas onto the grid.
    Gridify,
    /// Presence counts and volumes from an event stream.
    Presence {
        /// First day of the slot axis; earlier events only set positions.
        #[arg(long, requires = "days")]
        start: Option<NaiveDate>,
        #[arg(long, requires = "start")]
        days: Option<usize>,
        /// Suppress counts below this.
        #[arg(long)]
        k: Option<u32>,
    },
    /// Day and time filters, missing-data log and metadata ranking.
    Filter,
    /// Weekly signatures and land-use clustering or classification.
    Landuse {
        #[arg(long)]
        clusters: Option<usize>,
    },
    /// Static power law with intervals, outliers and cross-validation.
    FitStatic {
        /// Fit only cells with this label (needs --labels).
        #[arg(long)]
        landuse: Option<LandUse>,
    },
    /// Overnight fits and the activity-dependent coefficient lines.
    FitDynamic {
        #[arg(long)]
        kind: Option<ActivityKind>,
    },
    /// Dynamic densities and z-scores.
    Estimate,
    /// Event attendance.
    Attendance {
        /// Use the literal linear coefficient.
        #[arg(long)]
        paper_eq19: bool,
    },
    /// Rescaled land-use baseline attendance.
    BaselineXu,
    /// Compare attendance estimates with the truth and the baseline.
    Compare,
    /// Synthetic city, event stream and ground truth.
    Simulate {
        /// Do not write the raw event stream.
        #[arg(long)]
        skip_events: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Gridify => "gridify",
            Command::Presence { .. } => "presence",
            Command::Filter => "filter",
            Command::Landuse { .. } => "landuse",
            Command::FitStatic { .. } => "fit-static",
            Command::FitDynamic { .. } => "fit-dynamic",
            Command::Estimate => "estimate",
            Command::Attendance { .. } => "attendance",
            Command::BaselineXu => "baseline-xu",
            Command::Compare => "compare",
            Command::Simulate { .. } => "simulate",
        }
    }
}

fn merge(cfg: &mut PipelineConfig, args: InputArgs) {
    let i = &mut cfg.inputs;
    let pairs = [
        (&mut i.grid, args.grid),
        (&mut i.admin, args.admin),
        (&mut i.census, args.census),
        (&mut i.events, args.events),
        (&mut i.presence, args.presence),
        (&mut i.volumes, args.volumes),
        (&mut i.labels, args.labels),
        (&mut i.signatures, args.signatures),
        (&mut i.params, args.params),
        (&mut i.event_specs, args.event_specs),
        (&mut i.truth, args.truth),
        (&mut i.estimates, args.estimates),
        (&mut i.baseline, args.baseline),
        (&mut cfg.filter, args.filter),
    ];
    for (slot, given) in pairs {
        if given.is_some() {
            *slot = given;
        }
    }
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let Common {
        config,
        seed,
        out,
        inputs,
    } = cli.common;
    let name = cli.command.name();
    if let Command::Simulate { skip_events } = cli.command {
        return commands::simulate(config.as_deref(), seed, &out, skip_events);
    }
    let mut cfg = match &config {
        Some(p) => PipelineConfig::read(p)?,
        None => PipelineConfig::default(),
    };
    merge(&mut cfg, inputs);
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let mut ctx = commands::Context::new(cfg, seed, &out, name)?;
    match cli.command {
        Command::Gridify => commands::gridify(&mut ctx)?,
        Command::Presence { start, days, k } => commands::presence(&mut ctx, start.zip(days), k)?,
        Command::Filter => commands::filter(&mut ctx)?,
        Command::Landuse { clusters } => commands::landuse(&mut ctx, clusters)?,
        Command::FitStatic { landuse } => commands::fit_static(&mut ctx, landuse)?,
        Command::FitDynamic { kind } => commands::fit_dynamic(&mut ctx, kind)?,
        Command::Estimate => commands::estimate(&mut ctx)?,
        Command::Attendance { paper_eq19 } => commands::attendance(&mut ctx, paper_eq19)?,
        Command::BaselineXu => commands::baseline_xu(&mut ctx)?,
        Command::Compare => commands::compare(&mut ctx)?,
        Command::Simulate { .. } => unreachable!("handled above"),
    }
    ctx.out.finish()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
