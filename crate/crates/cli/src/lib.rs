//! `pscat`: configuration, dispatch and output plumbing for the simulation library.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use config::{OutputFormat, RunConfig};
use error::CliError;
use output::{file_name, Manifest, Mode, OutputPaths};

#[derive(Debug, Parser)]
#[command(
    name = "pscat",
    version,
    about = "Protective scattering off a single bound particle: simulation, reconstruction, budgets"
)]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Primary output file; other outputs are named after its stem.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Worker threads. Results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Also write gnuplot scripts.
    #[arg(long, global = true)]
    pub plot: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate scattering events.
    Simulate {
        #[command(subcommand)]
        regime: Simulate,
    },
    /// Recover the bound density from an events file.
    Reconstruct {
        #[command(subcommand)]
        route: Reconstruct,
    },
    /// Finite-dimensional pointer model.
    Pointer {
        #[command(subcommand)]
        action: Pointer,
    },
    /// Experiment duration and projectile feasibility.
    Budget(BudgetArgs),
    /// Print the effective configuration as TOML.
    Config,
}

#[derive(Debug, Subcommand)]
pub enum Simulate {
    /// Born-regime events with |Δp| drawn from |F|²G²q.
    Born(CountArgs),
    /// Deterministic deflections at sampled impact parameters.
    Semiclassical(CountArgs),
    /// Runs of sudden collisions until the state is destroyed.
    Impulsive(ImpulsiveArgs),
}

#[derive(Debug, Args)]
pub struct CountArgs {
    /// Number of events (accepts 1e6).
    #[arg(long, value_parser = parse_count)]
    pub events: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ImpulsiveArgs {
    #[arg(long, value_parser = parse_count)]
    pub runs: Option<u64>,
    #[arg(long)]
    pub collisions: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Reconstruct {
    /// Binned |F̂|² from Born events, then the inverse transform.
    Fourier(FourierArgs),
    /// Enclosed charge from the deflection curve, then ψ̂.
    Semiclassical(EventsArgs),
}

#[derive(Debug, Args)]
pub struct EventsArgs {
    /// Events file (csv or jsonl).
    #[arg(long, value_name = "PATH")]
    pub events: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FourierArgs {
    #[arg(long, value_name = "PATH")]
    pub events: Option<PathBuf>,
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Pointer {
    /// Impulsive trials against the Born rule and the protective shift.
    Demo(PointerArgs),
}

#[derive(Debug, Args)]
pub struct PointerArgs {
    #[arg(long, value_parser = parse_count)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub dimension: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// muon, neutron, wimp or custom (reads [custom]).
    #[arg(long)]
    pub preset: Option<String>,
}

/// Parses a non-negative integer count, allowing `1e6` and `1_000`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    let s = s.replace('_', "");
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let v: f64 = s.parse().map_err(|_| format!("not a count: {s}"))?;
    if v < 0.0 || v.fract() != 0.0 || v > 9.007_199_254_740_992e15 {
        return Err(format!("not a non-negative integer: {s}"));
    }
    Ok(v as u64)
}

/// The clap command with output documentation attached to every subcommand.
pub fn command() -> clap::Command {
    Cli::command()
        .mut_subcommand("simulate", |c| {
            c.mut_subcommand("born", |c| c.after_help(Mode::SimulateBorn.help()))
                .mut_subcommand("semiclassical", |c| {
                    c.after_help(Mode::SimulateSemiclassical.help())
                })
                .mut_subcommand("impulsive", |c| {
                    c.after_help(Mode::SimulateImpulsive.help())
                })
        })
        .mut_subcommand("reconstruct", |c| {
            c.mut_subcommand("fourier", |c| c.after_help(Mode::ReconstructFourier.help()))
                .mut_subcommand("semiclassical", |c| {
                    c.after_help(Mode::ReconstructSemiclassical.help())
                })
        })
        .mut_subcommand("pointer", |c| {
            c.mut_subcommand("demo", |c| c.after_help(Mode::PointerDemo.help()))
        })
        .mut_subcommand("budget", |c| c.after_help(Mode::Budget.help()))
}

pub fn parse_args<I, T>(args: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = command().try_get_matches_from(args)?;
    Cli::from_arg_matches(&matches)
}

impl Cli {
    /// Configuration after applying command-line overrides.
    pub fn resolve_config(&self) -> Result<(RunConfig, Option<Mode>), CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.run.out = Some(o.clone());
        }
        if let Some(f) = self.format {
            cfg.run.format = f;
        }
        cfg.run.plot |= self.plot;
        let mode = match &self.command {
            Command::Simulate { regime } => Some(match regime {
                Simulate::Born(a) => {
                    if let Some(n) = a.events {
                        cfg.born.events = n;
                    }
                    Mode::SimulateBorn
                }
                Simulate::Semiclassical(a) => {
                    if let Some(n) = a.events {
                        cfg.semiclassical.events = n;
                    }
                    Mode::SimulateSemiclassical
                }
                Simulate::Impulsive(a) => {
                    if let Some(n) = a.runs {
                        cfg.impulsive.runs = n;
                    }
                    if let Some(k) = a.collisions {
                        cfg.impulsive.collisions = k;
                    }
                    Mode::SimulateImpulsive
                }
            }),
            Command::Reconstruct { route } => Some(match route {
                Reconstruct::Fourier(a) => {
                    if let Some(p) = &a.events {
                        cfg.reconstruct.events = Some(p.clone());
                    }
                    if let Some(b) = a.bins {
                        cfg.reconstruct.bins = b;
                    }
                    Mode::ReconstructFourier
                }
                Reconstruct::Semiclassical(a) => {
                    if let Some(p) = &a.events {
                        cfg.reconstruct.events = Some(p.clone());
                    }
                    Mode::ReconstructSemiclassical
                }
            }),
            Command::Pointer {
                action: Pointer::Demo(a),
            } => {
                if let Some(n) = a.trials {
                    cfg.pointer.trials = n;
                }
                if let Some(d) = a.dimension {
                    cfg.pointer.dimension = d;
                }
                Some(Mode::PointerDemo)
            }
            Command::Budget(a) => {
                if let Some(p) = &a.preset {
                    cfg.budget.preset = Some(p.to_ascii_lowercase());
                }
                Some(Mode::Budget)
            }
            Command::Config => None,
        };
        Ok((cfg, mode))
    }
}

/// Runs the parsed command; returns what should go to stdout.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let start = Instant::now();
    let (cfg, mode) = cli.resolve_config()?;
    let Some(mode) = mode else {
        return cfg.to_toml();
    };
    let threads = match cli.threads {
        Some(0) => return Err(CliError::config("--threads must be at least 1")),
        Some(n) => n,
        None => rayon::current_num_threads(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::config(e.to_string()))?;
    let paths = OutputPaths::resolve(mode, cfg.run.out.as_deref(), cfg.run.format);
    let (outcome, stdout) = pool.install(|| -> Result<_, CliError> {
        Ok(match mode {
            Mode::SimulateBorn => (commands::simulate_born(&cfg, &paths)?, String::new()),
            Mode::SimulateSemiclassical => (
                commands::simulate_semiclassical(&cfg, &paths)?,
                String::new(),
            ),
            Mode::SimulateImpulsive => (commands::simulate_impulsive(&cfg, &paths)?, String::new()),
            Mode::ReconstructFourier => {
                (commands::reconstruct_fourier(&cfg, &paths)?, String::new())
            }
            Mode::ReconstructSemiclassical => (
                commands::reconstruct_semiclassical_cmd(&cfg, &paths)?,
                String::new(),
            ),
            Mode::PointerDemo => (commands::pointer_demo(&cfg, &paths)?, String::new()),
            Mode::Budget => commands::budget(&cfg, &paths)?,
        })
    })?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    let manifest = Manifest {
        mode: mode.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: cfg.hash()?,
        seed: cfg.run.seed,
        threads,
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: outcome.outputs.iter().map(|p| file_name(p)).collect(),
        warnings: outcome.warnings,
        config: cfg.to_toml()?,
    };
    manifest.write(&paths)?;
    Ok(stdout)
}
