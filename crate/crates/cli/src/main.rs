//! Command-line front end for the weak-form oscillator solver.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{parse_list, Common, EnergyTolerances};
use error::CliError;

#[derive(Parser)]
#[command(name = "weakdyn", version, about = "Weak-form solver for damped oscillators, checked against Duhamel references")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Problem configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of output grid points; overrides `output.grid_points`.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve once and compare with the reference solution.
    Solve(CommonArgs),
    /// Sweep basis sizes and tabulate errors.
    Convergence {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated degrees (or mode counts for damped-wave bases).
        #[arg(long, default_value = "4,8,16,32")]
        degrees: String,
        /// Errors below this are treated as converged.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Audit energy balance and the energy inequality.
    Energy {
        #[command(flatten)]
        common: CommonArgs,
        /// Trajectory to audit: `oracle` or `weak`.
        #[arg(long, default_value = "oracle")]
        engine: String,
        /// Tolerance on the finite-difference energy law residual.
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        /// Adds `corrupt * t` to the displacement before auditing.
        #[arg(long, default_value_t = 0.0, hide = true)]
        corrupt: f64,
    },
    /// Evaluate the initial-velocity to final-displacement map.
    BoundaryMap {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated initial velocities to evaluate.
        #[arg(long, default_value = "-1,0,1", allow_hyphen_values = true)]
        v0: String,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let setup = |c: &CommonArgs| -> Result<_, CliError> {
        let loaded = config::load(&c.config)?;
        let common = Common::new(&loaded, c.out.clone(), c.grid)?;
        Ok((loaded, common))
    };
    match cli.command {
        Command::Solve(c) => {
            let (loaded, common) = setup(&c)?;
            commands::solve(&loaded, &common)
        }
        Command::Convergence { common: c, degrees, tol } => {
            let degrees = parse_list::<usize>(&degrees).map_err(CliError::Usage)?;
            let (loaded, common) = setup(&c)?;
            commands::convergence(&loaded, &common, &degrees, tol)
        }
        Command::Energy {
            common: c,
            engine,
            tol,
            corrupt,
        } => {
            let (loaded, common) = setup(&c)?;
            let tolerances = EnergyTolerances {
                law: tol,
                balance: 1e-7,
                drift: 1e-9,
            };
            commands::energy(&loaded, &common, &engine, c.grid.is_some(), &tolerances, corrupt)
        }
        Command::BoundaryMap { common: c, v0 } => {
            let v0s = parse_list::<f64>(&v0).map_err(CliError::Usage)?;
            let (loaded, common) = setup(&c)?;
            commands::boundary_map_cmd(&loaded, &common, &v0s)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("WEAKFORM_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
