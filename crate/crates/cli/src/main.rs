//! `evcharge`: generate a scenario, derive latent demand, deploy, refine,
//! evaluate and compare, one file-producing stage per subcommand.

mod commands;
mod compare;
mod plots;
mod reports;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use evcharge::cmclp::SolverKind;
use evcharge::sim::Regime;

#[derive(Debug, Parser)]
#[command(name = "evcharge", version, about = "EV charging demand simulation, deployment and refinement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic scenario file.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Simulate with unconstrained zone chargers and write latent demand.
    Demand {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        regime: RegimeArg,
    },
    /// Solve the covering model for a latent demand table.
    Deploy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: PathBuf,
        /// Latent demand table written by `demand`.
        #[arg(long)]
        demand: PathBuf,
        /// Daily budget (AUD); overrides the settings file.
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long, value_enum, default_value_t = SolverArg::Heuristic)]
        solver: SolverArg,
    },
    /// Run the utilization-driven refinement loop on a deployment.
    Refine {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        regime: RegimeArg,
        #[arg(long)]
        deployment: PathBuf,
    },
    /// Simulate a deployment and write its KPI report.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        regime: RegimeArg,
        #[arg(long)]
        deployment: PathBuf,
        /// Report label; defaults to the deployment file stem.
        #[arg(long)]
        label: Option<String>,
    },
    /// Tabulate KPI reports side by side.
    Compare {
        /// KPI reports written by `evaluate`.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write start-time and duration histograms as SVG.
        #[arg(long)]
        plots: bool,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Settings file with optional [scenario], [behavior], [cost] and
    /// [refine] tables.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for scenario generation (`generate`) or simulation (other
    /// commands); defaults to the seed stored in the scenario.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RegimeArg {
    Destination,
    Enroute,
    Combined,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Destination => Regime::Destination,
            RegimeArg::Enroute => Regime::EnRoute,
            RegimeArg::Combined => Regime::Combined,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolverArg {
    Exact,
    Heuristic,
}

impl From<SolverArg> for SolverKind {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Exact => SolverKind::Exact,
            SolverArg::Heuristic => SolverKind::Heuristic,
        }
    }
}

/// Process outcome classes, mapped to exit codes 1 to 3.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Input(String),
    Invariant(String),
}

impl From<evcharge::Error> for Failure {
    fn from(e: evcharge::Error) -> Self {
        use evcharge::Error as E;
        match e {
            E::Usage(_) | E::Size { .. } => Failure::Usage(e.to_string()),
            E::Simulation(_) => Failure::Invariant(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, kind, msg) = match f {
                Failure::Usage(m) => (1, "usage", m),
                Failure::Input(m) => (2, "input", m),
                Failure::Invariant(m) => (3, "internal", m),
            };
            eprintln!("error ({kind}): {msg}");
            ExitCode::from(code)
        }
    }
}
