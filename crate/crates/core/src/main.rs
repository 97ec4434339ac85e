use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tempered_fts::delay_solver::SolverConfig;
use tempered_fts::report_cli::{
    cmd_check, cmd_reproduce, cmd_simulate, cmd_verify, exit_code, CriterionSelector, DelayGridArg, Example, MethodArg,
};
use tempered_fts::stability_criteria::DEFAULT_GRID_POINTS;

/// Finite-time stability checks and simulation for tempered fractional
/// delay systems.
///
/// Exit codes: 0 stable or success, 2 inconclusive, 1 error.
#[derive(Parser)]
#[command(name = "tfs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct SolverArgs {
    /// Time step.
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Tempered)]
    method: MethodArg,
    /// How to handle a step that does not divide the delay.
    #[arg(long, value_enum, default_value_t = DelayGridArg::AutoAdjust)]
    delay_grid: DelayGridArg,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            h: self.step,
            method: self.method.into(),
            delay_grid_policy: self.delay_grid.into(),
            ..SolverConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate stability criteria and write bound curves.
    Check {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        criterion: CriterionSelector,
        /// Number of uniform grid points on [0, T].
        #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the system and write the trajectory.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check, simulate, and test the trajectory against the criteria.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        criterion: CriterionSelector,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write condition curves and an audit for a built-in example.
    Reproduce {
        #[arg(value_enum)]
        example: Example,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check {
            config,
            criterion,
            grid,
            out,
        } => cmd_check(config, *criterion, *grid, out),
        Command::Simulate { config, solver, out } => cmd_simulate(config, &solver.config(), out),
        Command::Verify {
            config,
            criterion,
            solver,
            out,
        } => cmd_verify(config, *criterion, &solver.config(), out),
        Command::Reproduce { example, out } => cmd_reproduce(*example, out),
    };
    match &result {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
        }
        Err(e) => {
            for line in e.lines() {
                eprintln!("error: {line}");
            }
        }
    }
    ExitCode::from(exit_code(&result) as u8)
}
