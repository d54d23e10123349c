//! `avmerge`: solve, verify and sweep merging scenarios from the command line.
//!
//! Exit codes: 0 success, 1 unreadable or invalid input, 2 no feasible plan,
//! 3 a verification property failed.

mod commands;
mod report;
mod scenario_file;

use std::ops::Range;
use std::path::PathBuf;
use std::process::ExitCode;

use avmerge_core::policy::FastPathMode;
use avmerge_core::SolverOptions;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "avmerge",
    version,
    about = "Optimal merging index and trajectory for an autonomous vehicle"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize every sequence index and report the chosen plan.
    Solve(SolveArgs),
    /// Check the solver against the dense-grid oracle and the closed-form rules.
    Verify(VerifyArgs),
    /// Optimal index and cost over a grid of time/energy weights.
    SweepAlpha(SweepArgs),
    /// Write a seeded random scenario file.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FastPathArg {
    Off,
    Advisory,
    Only,
}

impl From<FastPathArg> for FastPathMode {
    fn from(a: FastPathArg) -> Self {
        match a {
            FastPathArg::Off => FastPathMode::Off,
            FastPathArg::Advisory => FastPathMode::Advisory,
            FastPathArg::Only => FastPathMode::Only,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Table,
    Json,
}

/// Overrides for the scenario file's `[solver]` table.
#[derive(Args, Clone, Debug)]
struct SolverFlags {
    /// Coarse search grid, time points by speed points.
    #[arg(long, value_name = "NTxNV", value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    #[arg(long, value_name = "TOL")]
    refine_tol: Option<f64>,
    #[arg(long, value_enum)]
    fast_path: Option<FastPathArg>,
}

impl SolverFlags {
    fn apply(&self, mut opts: SolverOptions) -> SolverOptions {
        if let Some((t, v)) = self.grid {
            opts.grid_t = t;
            opts.grid_v = v;
        }
        if let Some(tol) = self.refine_tol {
            opts.refine_tol = tol;
        }
        if let Some(mode) = self.fast_path {
            opts.fast_path = mode.into();
        }
        opts
    }
}

#[derive(Args)]
struct SolveArgs {
    scenario: PathBuf,
    /// Replace the scenario's time/energy weight.
    #[arg(long)]
    alpha: Option<f64>,
    #[command(flatten)]
    solver: SolverFlags,
    /// Write `trajectory.csv` and `plan.json` here.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Trajectory sampling step (s).
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
}

#[derive(Args)]
struct VerifyArgs {
    /// Check one scenario instead of a seed range.
    scenario: Option<PathBuf>,
    /// Seeds of the random scenarios, as `START..END`.
    #[arg(long, default_value = "0..50", value_parser = parse_seeds)]
    seeds: Range<u64>,
    /// Oracle grid, time points by speed points.
    #[arg(long, value_name = "NTxNV", default_value = "512x512", value_parser = parse_grid)]
    grid: (usize, usize),
    /// Subtract discounted disruptions in the oracle; the oracle suites must then fail.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Args)]
struct SweepArgs {
    scenario: PathBuf,
    /// Comma-separated weights in [0, 1].
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1"
    )]
    alphas: Vec<f64>,
    #[command(flatten)]
    solver: SolverFlags,
    /// Also write the table to `sweep.csv` here.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fix the time/energy weight instead of drawing it.
    #[arg(long)]
    alpha: Option<f64>,
    /// Destination file; stdout when absent.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (t, v) = s.split_once('x').ok_or("expected NTxNV, e.g. 64x64")?;
    let n = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    let (t, v) = (n(t)?, n(v)?);
    if t < 2 || v < 2 {
        return Err("grid needs at least 2 points per axis".into());
    }
    Ok((t, v))
}

fn parse_seeds(s: &str) -> Result<Range<u64>, String> {
    let (a, b) = s
        .split_once("..")
        .ok_or("expected START..END, e.g. 0..50")?;
    let n = |x: &str| x.trim().parse::<u64>().map_err(|e| format!("{x:?}: {e}"));
    let (a, b) = (n(a)?, n(b)?);
    if a >= b {
        return Err("empty seed range".into());
    }
    Ok(a..b)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(args) => commands::solve(args),
        Command::Verify(args) => commands::verify(args),
        Command::SweepAlpha(args) => commands::sweep_alpha(args),
        Command::Generate(args) => commands::generate(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn grid_and_seed_parsing() {
        assert_eq!(parse_grid("64x32"), Ok((64, 32)));
        assert!(parse_grid("64").is_err());
        assert!(parse_grid("1x8").is_err());
        assert_eq!(parse_seeds("3..9"), Ok(3..9));
        assert!(parse_seeds("9..3").is_err());
    }
}
