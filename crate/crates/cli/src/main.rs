//! Command-line runner for the memristive controller: circuit simulation,
//! controller synthesis, closed-loop runs and the standalone global solver.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Overrides;

#[derive(Parser)]
#[command(name = "memctl", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SolverFlags {
    /// Branch-and-bound termination gap.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Bound child nodes sequentially.
    #[arg(long)]
    deterministic: bool,
}

impl SolverFlags {
    fn overrides(&self) -> Result<Overrides, error::CliError> {
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return Err(error::CliError::Config("--epsilon must be positive".into()));
            }
        }
        Ok(Overrides { epsilon: self.epsilon, deterministic: self.deterministic })
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate the memristive gain controller against the ideal gain law.
    SimulateAgc(Common),
    /// Synthesize an RGS controller and its circuit values.
    Design {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Closed-loop simulation of a design report.
    SimulateRgs(Common),
    /// Solve the global eigenvalue problem for a vertex file.
    SolveBmi {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Full actuator chain: design, closed loop and published checks.
    ReproducePpa {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
    },
}

fn run(cli: Cli) -> Result<(), error::CliError> {
    match cli.cmd {
        Cmd::SimulateAgc(c) => commands::simulate_agc(&c.config, &c.out),
        Cmd::Design { common, solver } => commands::design(&common.config, &common.out, solver.overrides()?).map(|_| ()),
        Cmd::SimulateRgs(c) => commands::simulate_rgs(&c.config, &c.out).map(|_| ()),
        Cmd::SolveBmi { common, solver } => commands::solve_bmi(&common.config, &common.out, solver.overrides()?),
        Cmd::ReproducePpa { config, out, solver } => commands::reproduce_ppa(config.as_deref(), &out, solver.overrides()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
