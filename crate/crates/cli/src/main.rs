//! `epibvp`: batch front end for the iteration solver.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use epibvp_core::Label;

use crate::commands::{CliError, EXIT_USAGE};
use crate::config::{CommonArgs, RunConfig, OUT_DIR_ENV};

#[derive(Parser, Debug)]
#[command(
    name = "epibvp",
    version,
    about = "Shooting solver for r^2 w'' - r w' = w^2/2 + lambda r^4/2 on [0, 1]"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Find every branch for each lambda and write its profile
    Solve(CommonArgs),
    /// Pointwise ODE residuals on r = 0.0..0.9, one column per lambda
    ResidualTable(TableArgs),
    /// Bisect for the largest lambda with two branches
    Critical(CriticalArgs),
    /// Branch counts, branch gap and phi curves over a list of lambdas
    Sweep(CommonArgs),
    /// Closed-form solution of the linearized problem
    Linear(CommonArgs),
    /// Compare branches against an independent RK4 shooting solver
    OracleCheck(CommonArgs),
}

#[derive(Args, Debug)]
struct TableArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Only this branch (lower, upper, positive, negative)
    #[arg(long, value_parser = parse_label)]
    branch: Option<Label>,
}

#[derive(Args, Debug)]
struct CriticalArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Lower end of the bracket; must have two branches
    #[arg(long, allow_negative_numbers = true)]
    lo: Option<f64>,
    /// Upper end of the bracket; must have none
    #[arg(long, allow_negative_numbers = true)]
    hi: Option<f64>,
}

fn parse_label(s: &str) -> Result<Label, String> {
    s.parse().map_err(|e: epibvp_core::Error| e.to_string())
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let env_out = std::env::var_os(OUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from);
    let resolve = |common: &CommonArgs, branch, lo, hi| RunConfig::resolve(common, branch, lo, hi, env_out.clone());
    match cli.command {
        Command::Solve(c) => commands::solve(resolve(&c, None, None, None)?),
        Command::ResidualTable(t) => commands::residual_table(resolve(&t.common, t.branch, None, None)?),
        Command::Critical(c) => commands::critical(resolve(&c.common, None, c.lo, c.hi)?),
        Command::Sweep(c) => commands::sweep(resolve(&c, None, None, None)?),
        Command::Linear(c) => commands::linear(resolve(&c, None, None, None)?),
        Command::OracleCheck(c) => commands::oracle_check(resolve(&c, None, None, None)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("epibvp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
