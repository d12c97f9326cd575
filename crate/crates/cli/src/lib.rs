//! The `fipp` command-line tool.
//!
//! Every command resolves a [`RunConfig`] from defaults, an optional TOML
//! file and explicit flags (flags win), writes it to `config.toml` in the
//! output directory, and then writes its outputs next to it.

pub mod commands;
pub mod config;
pub mod exit;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use fipp::sim::{PlannerKind, ScenarioKind};
use fipp::Vec2;

pub use config::RunConfig;
pub use exit::CliError;

#[derive(Debug, Parser)]
#[command(name = "fipp", version, about = "Flow-informed path planning")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every command.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// TOML file with run parameters; flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Flow-cost weight.
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Influence radius, meters.
    #[arg(long, global = true)]
    pub h: Option<f64>,
    /// Self-propelling coefficient.
    #[arg(long, global = true)]
    pub xi: Option<f64>,
    /// Grid cell size, meters.
    #[arg(long, global = true)]
    pub cell_size: Option<f64>,
    /// Violation distance, meters.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract a flow field from a track log.
    Extract {
        #[arg(long, value_name = "PATH")]
        tracks: PathBuf,
    },
    /// Advect test particles through a flow field.
    Predict {
        #[arg(long, value_name = "PATH")]
        field: PathBuf,
        /// Ground-truth track log; advects from each track's first position.
        #[arg(long, value_name = "PATH")]
        tracks: Option<PathBuf>,
        /// Start point `x,y`; repeatable.
        #[arg(long, value_parser = parse_point, value_name = "X,Y")]
        start: Vec<Vec2>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Plan a path on a flow field.
    Plan {
        #[arg(long, value_name = "PATH")]
        field: PathBuf,
        #[arg(long, value_parser = parse_point, value_name = "X,Y")]
        start: Vec2,
        #[arg(long, value_parser = parse_point, value_name = "X,Y")]
        goal: Vec2,
        /// Impassable cells, one `i,j` per line.
        #[arg(long, value_name = "PATH")]
        blocked: Option<PathBuf>,
    },
    /// Run one simulated episode.
    Simulate {
        #[arg(long, value_parser = parse_kind)]
        scenario: Option<ScenarioKind>,
        #[arg(long)]
        peds: Option<usize>,
        #[arg(long, value_parser = parse_planner)]
        planner: Option<PlannerKind>,
    },
    /// Run both planners over scenario kinds and seeds and compare them.
    Bench {
        /// `all` or a comma list of kinds.
        #[arg(long, value_parser = config::parse_kinds)]
        kinds: Option<KindList>,
        /// `a..b` or a comma list.
        #[arg(long, value_parser = config::parse_seeds)]
        seeds: Option<SeedList>,
        #[arg(long)]
        peds: Option<usize>,
    },
}

/// Parsed as one comma-separated value rather than a repeated flag.
type KindList = Vec<ScenarioKind>;
type SeedList = Vec<u64>;

fn parse_point(s: &str) -> Result<Vec2, String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `x,y`, got `{s}`"))?;
    let num = |v: &str| {
        v.trim()
            .parse::<f64>()
            .ok()
            .filter(|f| f.is_finite())
            .ok_or_else(|| format!("cannot parse `{s}` as a point"))
    };
    Ok(Vec2::new(num(x)?, num(y)?))
}

fn parse_kind(s: &str) -> Result<ScenarioKind, String> {
    s.parse().map_err(|e: fipp::Error| e.to_string())
}

fn parse_planner(s: &str) -> Result<PlannerKind, String> {
    s.parse().map_err(|e: fipp::Error| e.to_string())
}

/// Resolve the effective configuration for `cli`.
pub fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let c = &cli.common;
    if let Some(v) = &c.out {
        cfg.out = v.clone();
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = c.lambda {
        cfg.params.cost.lambda_flow = v;
    }
    if let Some(v) = c.h {
        cfg.params.flow.h = v;
    }
    if let Some(v) = c.xi {
        cfg.params.flow.xi = v;
    }
    if let Some(v) = c.cell_size {
        cfg.params.cell_size = v;
    }
    if let Some(v) = c.threshold {
        cfg.threshold = v;
    }
    match &cli.command {
        Command::Predict { dt, steps, .. } => {
            if let Some(v) = dt {
                cfg.predict.dt = *v;
            }
            if let Some(v) = steps {
                cfg.predict.steps = *v;
            }
        }
        Command::Simulate {
            scenario,
            peds,
            planner,
        } => {
            if let Some(v) = scenario {
                cfg.scenario.kind = *v;
            }
            if peds.is_some() {
                cfg.scenario.n_peds = *peds;
            }
            if let Some(v) = planner {
                cfg.scenario.planner = *v;
            }
        }
        Command::Bench { kinds, seeds, peds } => {
            if let Some(v) = kinds {
                cfg.bench.kinds = v.clone();
            }
            if let Some(v) = seeds {
                cfg.bench.seeds = v.clone();
            }
            if peds.is_some() {
                cfg.scenario.n_peds = *peds;
            }
        }
        Command::Extract { .. } | Command::Plan { .. } => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Run `cli` and return the text to print on success.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let cfg = resolve(cli)?;
    commands::prepare_out(&cfg)?;
    match &cli.command {
        Command::Extract { tracks } => commands::extract(&cfg, tracks),
        Command::Predict {
            field,
            tracks,
            start,
            ..
        } => commands::predict(&cfg, field, tracks.as_deref(), start),
        Command::Plan {
            field,
            start,
            goal,
            blocked,
        } => commands::plan(&cfg, field, *start, *goal, blocked.as_deref()),
        Command::Simulate { .. } => commands::simulate(&cfg),
        Command::Bench { .. } => commands::bench(&cfg),
    }
}
