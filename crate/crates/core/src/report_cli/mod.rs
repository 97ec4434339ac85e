//! The `tfs` commands. Each command writes its files into an output
//! directory, records a `manifest.toml` and returns the process exit code:
//! 0 for a stable verdict or success, 2 for an inconclusive one, 1 for any
//! error.

mod output;
mod reproduce;

pub use output::{curve_csv, report_toml, trajectory_csv, RunManifest};
pub use reproduce::{audit_lines, cmd_reproduce, example_document, AuditEntry, Example};

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;
use thiserror::Error;

use crate::delay_solver::{self, DelayGridPolicy, Method, SolverConfig, SolverError, Trajectory};
use crate::stability_criteria::{evaluate_criterion, Criterion, CriterionError, CriterionReport, DEFAULT_GRID_POINTS};
use crate::system_model::{parse_system, ModelError, SystemDocument};
use output::{ensure_dir, write_file, VerificationEntry, VerificationFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Model { path: String, source: ModelError },
    #[error(transparent)]
    Criterion(#[from] CriterionError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("cannot serialize report: {0}")]
    Serialize(#[from] toml::ser::Error),
}

impl CliError {
    /// One line per problem, field-qualified where the problem has a field.
    pub fn lines(&self) -> Vec<String> {
        match self {
            CliError::Model { path, source } if !source.diagnostics().is_empty() => {
                source.diagnostics().iter().map(|d| format!("{path}: {d}")).collect()
            }
            other => vec![other.to_string()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionSelector {
    DelayDependent,
    DelayIndependent,
    Both,
}

impl CriterionSelector {
    pub fn criteria(self) -> Vec<Criterion> {
        match self {
            Self::DelayDependent => vec![Criterion::DelayDependent],
            Self::DelayIndependent => vec![Criterion::DelayIndependent],
            Self::Both => vec![Criterion::DelayDependent, Criterion::DelayIndependent],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Tempered,
    ExpTransform,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Tempered => Method::TemperedProductIntegration,
            MethodArg::ExpTransform => Method::ExpTransformCaputo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DelayGridArg {
    RequireDivisible,
    AutoAdjust,
}

impl From<DelayGridArg> for DelayGridPolicy {
    fn from(p: DelayGridArg) -> Self {
        match p {
            DelayGridArg::RequireDivisible => DelayGridPolicy::RequireDivisible,
            DelayGridArg::AutoAdjust => DelayGridPolicy::AutoAdjustStep,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Check,
    Simulate,
    Verify,
    Reproduce,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutcome {
    pub exit_code: i32,
    /// Human-readable lines for stdout.
    pub summary: Vec<String>,
    pub files: Vec<PathBuf>,
}

pub fn load_config(path: &Path) -> Result<SystemDocument, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_system(&text).map_err(|source| CliError::Model {
        path: path.display().to_string(),
        source,
    })
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map_or_else(String::new, |n| n.to_string_lossy().into_owned())
}

fn finish(
    command: CommandKind,
    input: String,
    out: &Path,
    overrides: BTreeMap<String, f64>,
    mut outcome: CommandOutcome,
) -> Result<CommandOutcome, CliError> {
    let manifest = RunManifest {
        command,
        input,
        output_dir: out.display().to_string(),
        tolerance_overrides: overrides,
        exit_code: outcome.exit_code,
        outputs: outcome.files.iter().map(|p| file_name(p)).collect(),
    };
    outcome
        .files
        .push(write_file(&out.join("manifest.toml"), &manifest.to_toml())?);
    Ok(outcome)
}

fn solver_overrides(cfg: &SolverConfig) -> BTreeMap<String, f64> {
    let default = SolverConfig::default();
    let mut m = BTreeMap::new();
    if cfg.h != default.h {
        m.insert("step".into(), cfg.h);
    }
    if cfg.delay_grid_policy != default.delay_grid_policy {
        m.insert("require_divisible_delay_grid".into(), 1.0);
    }
    m
}

/// Evaluates the selected criteria and writes `report_<criterion>.toml` and
/// `curve_<criterion>.csv` for each. With both criteria, one stable verdict
/// suffices for exit 0.
pub fn cmd_check(
    config: &Path,
    selector: CriterionSelector,
    grid: usize,
    out: &Path,
) -> Result<CommandOutcome, CliError> {
    let doc = load_config(config)?;
    ensure_dir(out)?;
    let (reports, mut outcome) = check_reports(&doc, selector, grid, out)?;
    outcome.exit_code = if reports.iter().any(CriterionReport::is_stable) {
        EXIT_OK
    } else {
        EXIT_INCONCLUSIVE
    };
    let mut overrides = BTreeMap::new();
    if grid != DEFAULT_GRID_POINTS {
        overrides.insert("grid_points".into(), grid as f64);
    }
    finish(
        CommandKind::Check,
        config.display().to_string(),
        out,
        overrides,
        outcome,
    )
}

fn check_reports(
    doc: &SystemDocument,
    selector: CriterionSelector,
    grid: usize,
    out: &Path,
) -> Result<(Vec<CriterionReport>, CommandOutcome), CliError> {
    let mut outcome = CommandOutcome {
        exit_code: EXIT_OK,
        summary: doc
            .spec
            .warnings()
            .into_iter()
            .map(|w| format!("warning: {w}"))
            .collect(),
        files: Vec::new(),
    };
    let mut reports = Vec::new();
    for criterion in selector.criteria() {
        let report = evaluate_criterion(&doc.spec, &doc.query, criterion, grid, doc.printed)?;
        let name = criterion.name();
        let csv_name = format!("curve_{name}.csv");
        outcome.files.push(write_file(
            &out.join(&csv_name),
            &curve_csv(&report.curve, report.threshold),
        )?);
        outcome.files.push(write_file(
            &out.join(format!("report_{name}.toml")),
            &report_toml(&report, &csv_name)?,
        )?);
        outcome.summary.push(format!(
            "{name}: {} (bound at T = {:e}, threshold {:e})",
            report.verdict,
            report.bound_at_end(),
            report.threshold
        ));
        outcome.summary.extend(report.audit.iter().map(|a| format!("  {a}")));
        reports.push(report);
    }
    Ok((reports, outcome))
}

/// Solves the system and writes `trajectory.csv`.
pub fn cmd_simulate(config: &Path, cfg: &SolverConfig, out: &Path) -> Result<CommandOutcome, CliError> {
    let doc = load_config(config)?;
    let traj = delay_solver::solve(&doc.spec, cfg)?;
    ensure_dir(out)?;
    let mut outcome = CommandOutcome {
        exit_code: EXIT_OK,
        summary: Vec::new(),
        files: Vec::new(),
    };
    simulate_into(&traj, out, &mut outcome)?;
    finish(
        CommandKind::Simulate,
        config.display().to_string(),
        out,
        solver_overrides(cfg),
        outcome,
    )
}

fn simulate_into(traj: &Trajectory, out: &Path, outcome: &mut CommandOutcome) -> Result<(), CliError> {
    outcome
        .files
        .push(write_file(&out.join("trajectory.csv"), &trajectory_csv(traj))?);
    outcome.summary.push(format!(
        "trajectory: {} nodes, step {:e}, method {}, max norm {:e}",
        traj.len(),
        traj.h,
        traj.method.name(),
        traj.max_norm()
    ));
    Ok(())
}

/// Runs check and simulate, then confirms the trajectory respects every
/// promise made by the stable criteria. Exit 1 flags a stable verdict
/// contradicted by the trajectory, which indicates a defect.
pub fn cmd_verify(
    config: &Path,
    selector: CriterionSelector,
    cfg: &SolverConfig,
    out: &Path,
) -> Result<CommandOutcome, CliError> {
    let doc = load_config(config)?;
    ensure_dir(out)?;
    let (reports, mut outcome) = check_reports(&doc, selector, DEFAULT_GRID_POINTS, out)?;
    let traj = delay_solver::solve(&doc.spec, cfg)?;
    simulate_into(&traj, out, &mut outcome)?;

    let mut contradiction = false;
    let mut confirmed = false;
    let mut entries = Vec::new();
    for report in &reports {
        let v = delay_solver::verify_bound(&traj, &doc.spec, &doc.query, report)?;
        let name = report.criterion.name();
        let result = if !v.passed() {
            contradiction = true;
            "contradiction"
        } else if !v.hypothesis_met {
            "hypothesis_unmet"
        } else if report.is_stable() {
            confirmed = true;
            "confirmed"
        } else {
            "inconclusive"
        };
        if !v.hypothesis_met {
            outcome.summary.push(format!(
                "{name}: hypothesis unmet, history sup norm {:e} is not below xi = {:e}",
                v.history_norm,
                doc.query.xi()
            ));
        }
        if !v.passed() {
            outcome
                .summary
                .push(format!("{name}: trajectory violates a bound the criterion guarantees"));
        }
        outcome.summary.push(format!("{name}: verification {result}"));
        entries.push(VerificationEntry::new(
            report,
            &v,
            traj.max_norm(),
            doc.query.epsilon(),
            result,
        ));
    }
    let file = VerificationFile {
        step: traj.h,
        method: traj.method.name().to_owned(),
        trajectory_csv_path: "trajectory.csv".into(),
        checks: entries,
    };
    outcome
        .files
        .push(write_file(&out.join("verification.toml"), &toml::to_string(&file)?)?);
    outcome.exit_code = if contradiction {
        EXIT_ERROR
    } else if confirmed {
        EXIT_OK
    } else {
        EXIT_INCONCLUSIVE
    };
    finish(
        CommandKind::Verify,
        config.display().to_string(),
        out,
        solver_overrides(cfg),
        outcome,
    )
}

/// Exit code for a finished command, 1 for errors.
pub fn exit_code(result: &Result<CommandOutcome, CliError>) -> i32 {
    result.as_ref().map_or(EXIT_ERROR, |o| o.exit_code)
}
