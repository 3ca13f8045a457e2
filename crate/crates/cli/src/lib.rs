//! Command-line front end for the AoI scheduling simulator.
//!
//! Commands read a TOML experiment document (see the README for the schema),
//! run Monte-Carlo experiments or closed-form bounds and emit CSV. Figure
//! presets additionally render an SVG chart from their CSV.

pub mod chart;
pub mod config;
pub mod figure;
pub mod report;

use std::path::{Path, PathBuf};

use aoi_core::sim::{run_monte_carlo, RsMu};
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{load_document, Overrides, Plan, PolicyChoice};

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid or unreadable configuration; exit code 2.
    #[error("config error: {0}")]
    Config(String),
    /// Failure while running; exit code 1.
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "aoisim",
    version,
    about = "Age-of-Information scheduling simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Experiment document (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; CSV goes to stdout when omitted.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Base seed, overriding the document.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Monte-Carlo runs, overriding the document.
    #[arg(long, global = true, value_name = "N")]
    pub runs: Option<u64>,
    /// Slots per run, overriding the document.
    #[arg(long, global = true, value_name = "T")]
    pub horizon: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, value_name = "N")]
    pub parallel: Option<usize>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            runs: self.runs,
            horizon: self.horizon,
        }
    }

    fn plan(&self) -> Result<Plan, CliError> {
        let path = self
            .config
            .as_deref()
            .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
        Plan::from_document(&load_document(path)?, self.overrides())
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every policy of the document once.
    Simulate,
    /// Closed-form bounds for the document's network.
    Bounds,
    /// Run a built-in figure preset and render its chart.
    Figure {
        /// One of fig3..fig8.
        name: String,
    },
    /// Run every policy at every point of the document's sweep axes.
    Sweep,
    /// Check the document without running anything.
    Validate,
}

/// CSV text and the file name used when writing to an output directory.
pub struct Output {
    pub file_name: String,
    pub text: String,
}

pub fn cmd_simulate(plan: &Plan) -> Result<Output, CliError> {
    if plan.has_sweeps() {
        return Err(CliError::Config(
            "document has [[sweep]] axes; use the sweep command".into(),
        ));
    }
    Ok(Output {
        file_name: "simulate.csv".into(),
        text: simulate_plan(plan)?,
    })
}

pub fn cmd_sweep(plan: &Plan) -> Result<Output, CliError> {
    Ok(Output {
        file_name: "sweep.csv".into(),
        text: simulate_plan(plan)?,
    })
}

fn simulate_plan(plan: &Plan) -> Result<String, CliError> {
    let mut rows = Vec::new();
    for exp in plan.experiments()? {
        let metrics = run_monte_carlo(&exp.config).map_err(|e| CliError::Runtime(e.to_string()))?;
        rows.push(report::simulate_row(&exp, &metrics)?);
    }
    report::to_csv(&report::SIMULATE_COLUMNS, &rows)
}

pub fn cmd_bounds(plan: &Plan) -> Result<Output, CliError> {
    // an RS policy with explicit probabilities also gets its own closed form
    let mu = plan.policies.iter().find_map(|p| match p {
        PolicyChoice::Rs(RsMu::Explicit(mu)) => Some(mu.as_slice()),
        _ => None,
    });
    let mut rows = Vec::new();
    for point in &plan.points {
        let report = point.bounds(mu)?.ok_or_else(|| {
            CliError::Config(
                "bounds need a network with fixed p and omega and Bernoulli arrivals".into(),
            )
        })?;
        rows.push(report::bounds_row(point, mu, &report)?);
    }
    Ok(Output {
        file_name: "bounds.csv".into(),
        text: report::to_csv(&report::BOUNDS_COLUMNS, &rows)?,
    })
}

pub fn cmd_validate(plan: &Plan) -> Result<String, CliError> {
    let experiments = if plan.policies.is_empty() {
        0
    } else {
        plan.experiments()?.len()
    };
    Ok(format!(
        "ok: {} point(s), {} policy(ies), {experiments} experiment(s)",
        plan.points.len(),
        plan.policies.len()
    ))
}

/// Runs a figure preset and returns its CSV and SVG.
pub fn cmd_figure(name: &str, overrides: Overrides) -> Result<(Output, Output), CliError> {
    let spec = figure::preset(name, overrides)?;
    eprintln!("{}", figure::describe(&spec));
    let csv = figure::run_figure(&spec)?;
    let svg = chart::render_svg(&csv)?;
    Ok((
        Output {
            file_name: format!("{name}.csv"),
            text: csv,
        },
        Output {
            file_name: format!("{name}.svg"),
            text: svg,
        },
    ))
}

fn write_output(dir: &Path, out: &Output) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(&out.file_name);
    std::fs::write(&path, &out.text)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn emit(common: &CommonArgs, out: Output) -> Result<(), CliError> {
    match &common.out {
        Some(dir) => {
            let path = write_output(dir, &out)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{}", out.text),
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let common = &cli.common;
    match &cli.command {
        Command::Simulate => emit(common, cmd_simulate(&common.plan()?)?),
        Command::Sweep => emit(common, cmd_sweep(&common.plan()?)?),
        Command::Bounds => emit(common, cmd_bounds(&common.plan()?)?),
        Command::Validate => {
            println!("{}", cmd_validate(&common.plan()?)?);
            Ok(())
        }
        Command::Figure { name } => {
            let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let (csv, svg) = cmd_figure(name, common.overrides())?;
            for out in [csv, svg] {
                let path = write_output(&dir, &out)?;
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

/// Executes a parsed command line, optionally inside a sized thread pool.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    match cli.common.parallel {
        Some(0) => Err(CliError::Config("--parallel must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?
            .install(|| dispatch(cli)),
        None => dispatch(cli),
    }
}
