//! Command-line front end. Problem files are TOML (see [`problem_file`]),
//! reports are JSON and trajectories are CSV.
//!
//! Exit codes: 0 success, 1 residual failure, 2 input error, 3 solver
//! non-convergence.

mod commands;
mod csv_io;
pub mod problem_file;

pub use commands::{
    cmd_check, cmd_derive, cmd_identities, cmd_solve, cmd_sweep, derive_text, sweep_rows, ControlReport, ExitStatus,
    Output, SweepRow, VariationalReport, CONTROL_GAP_TOL,
};
pub use csv_io::{jet_header, state_column, table_jets, trajectory_table, Table};
pub use problem_file::{Loaded, ProblemFile, ResolvedConfig};

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "falva", version, about = "Fractional action-like variational problems: derive, check, solve")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the expanded Euler-Lagrange equations and friction force.
    Derive {
        #[arg(long)]
        problem: PathBuf,
    },
    /// Evaluate residuals of a trajectory CSV.
    Check {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the problem and write result, trajectory and report.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value = "falva-out")]
        out: PathBuf,
        /// Points of the uniform output grid.
        #[arg(long, default_value_t = 201)]
        grid: usize,
        /// Overrides the file's newton_tol.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Solve once per α and tabulate action, endpoint and sup |∂H/∂θ|.
    Sweep {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        alpha_list: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the structural identities on a CSV or on a built-in probe curve.
    Identities {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidProblem(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<ProblemFile> {
    ProblemFile::from_toml(&read(path)?)
}

/// Runs one command without touching stdout or the file system.
pub fn execute(command: &Command) -> Result<(Output, Option<PathBuf>)> {
    match command {
        Command::Derive { problem } => Ok((cmd_derive(&load(problem)?)?, None)),
        Command::Check { problem, trajectory, tol, out } => {
            Ok((cmd_check(&load(problem)?, &read(trajectory)?, *tol)?, out.clone()))
        }
        Command::Solve { problem, out, grid, tol } => Ok((cmd_solve(&load(problem)?, *grid, *tol)?, Some(out.clone()))),
        Command::Sweep { problem, alpha_list, out } => Ok((cmd_sweep(&load(problem)?, alpha_list)?, out.clone())),
        Command::Identities { problem, trajectory, tol, out } => {
            let csv = trajectory.as_deref().map(read).transpose()?;
            Ok((cmd_identities(&load(problem)?, csv.as_deref(), *tol)?, out.clone()))
        }
    }
}

fn write_files(dir: &Path, files: &[(String, String)]) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidProblem(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    for (name, content) in files {
        std::fs::write(dir.join(name), content).map_err(io)?;
    }
    Ok(())
}

/// Parses `args`, runs the command, prints its output and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitStatus::InputError.code() } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok((output, dir)) => {
            if let Some(dir) = dir {
                if let Err(e) = write_files(&dir, &output.files) {
                    eprintln!("error: {e}");
                    return ExitStatus::InputError.code();
                }
            }
            let mut stdout = std::io::stdout().lock();
            // A closed pipe (e.g. `| head`) is not a failure of the command.
            let _ = stdout.write_all(output.stdout.as_bytes());
            if !output.stdout.ends_with('\n') {
                let _ = stdout.write_all(b"\n");
            }
            output.status.code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitStatus::of_error(&e).code()
        }
    }
}
