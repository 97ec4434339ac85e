//! File formats written by the commands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{CliError, CommandKind};
use crate::delay_solver::{BoundCheck, BoundVerification, Trajectory};
use crate::stability_criteria::{CriterionConstants, CriterionReport, DelayDependentConstants};

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<PathBuf, CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(path.to_path_buf())
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// `t,bound,threshold`, 17 significant digits.
pub fn curve_csv(curve: &[(f64, f64)], threshold: f64) -> String {
    let mut out = String::from("t,bound,threshold\n");
    for (t, b) in curve {
        let _ = writeln!(out, "{t:.16e},{b:.16e},{threshold:.16e}");
    }
    out
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv is ascii")
}

#[derive(Serialize)]
struct DelayDependentFile {
    alpha: f64,
    g: f64,
    q: f64,
    v: f64,
    psi: f64,
    phi: f64,
    three_pow: f64,
    lam_a: f64,
    lam_b: f64,
    lf: f64,
    additive: f64,
    coefficient: f64,
    rate: f64,
}

impl From<&DelayDependentConstants> for DelayDependentFile {
    fn from(k: &DelayDependentConstants) -> Self {
        let c = k.curve();
        Self {
            alpha: k.alpha,
            g: k.g,
            q: k.q,
            v: k.v,
            psi: k.psi,
            phi: k.phi,
            three_pow: k.three_pow,
            lam_a: k.lam_a,
            lam_b: k.lam_b,
            lf: k.lf,
            additive: c.additive,
            coefficient: c.coefficient,
            rate: c.rate,
        }
    }
}

#[derive(Serialize)]
struct DelayIndependentFile {
    alpha: f64,
    lam_s: f64,
    lf: f64,
    rate: f64,
    coefficient: f64,
}

#[derive(Serialize)]
#[serde(untagged)]
enum ConstantsFile {
    DelayDependent {
        formula: DelayDependentFile,
        #[serde(skip_serializing_if = "Option::is_none")]
        printed: Option<DelayDependentFile>,
    },
    DelayIndependent {
        formula: DelayIndependentFile,
    },
}

/// Non-finite reals are not valid TOML values; they are written as strings.
#[derive(Serialize)]
#[serde(untagged)]
enum Real {
    Finite(f64),
    Text(String),
}

fn real(v: f64) -> Real {
    if v.is_finite() {
        Real::Finite(v)
    } else {
        Real::Text(v.to_string())
    }
}

#[derive(Serialize)]
struct ReportFile {
    criterion: String,
    verdict: String,
    threshold: f64,
    horizon: f64,
    bound_at_horizon: Real,
    grid_points: usize,
    curve_csv_path: String,
    audit: Vec<String>,
    constants: ConstantsFile,
}

pub fn report_toml(report: &CriterionReport, curve_csv_path: &str) -> Result<String, CliError> {
    let constants = match &report.constants {
        CriterionConstants::DelayDependent { formula, printed } => ConstantsFile::DelayDependent {
            formula: formula.into(),
            printed: printed.as_ref().map(Into::into),
        },
        CriterionConstants::DelayIndependent(k) => ConstantsFile::DelayIndependent {
            formula: DelayIndependentFile {
                alpha: k.alpha,
                lam_s: k.lam_s,
                lf: k.lf,
                rate: k.rate,
                coefficient: k.coefficient()?,
            },
        },
    };
    let file = ReportFile {
        criterion: report.criterion.name().to_owned(),
        verdict: report.verdict.name().to_owned(),
        threshold: report.threshold,
        horizon: report.j_end,
        bound_at_horizon: real(report.bound_at_end()),
        grid_points: report.curve.len(),
        curve_csv_path: curve_csv_path.to_owned(),
        audit: report.audit.clone(),
        constants,
    };
    Ok(toml::to_string(&file)?)
}

#[derive(Serialize)]
struct CheckFile {
    passed: bool,
    worst_ratio: Real,
    #[serde(skip_serializing_if = "Option::is_none")]
    first_violation_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    first_violation_time: Option<f64>,
}

impl From<&BoundCheck> for CheckFile {
    fn from(c: &BoundCheck) -> Self {
        Self {
            passed: c.passed,
            worst_ratio: real(c.worst_ratio),
            first_violation_index: c.first_violation.map(|v| v.index),
            first_violation_time: c.first_violation.map(|v| v.time),
        }
    }
}

#[derive(Serialize)]
pub(crate) struct VerificationEntry {
    criterion: String,
    verdict: String,
    history_norm: f64,
    hypothesis_met: bool,
    max_norm: f64,
    epsilon: f64,
    outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon_check: Option<CheckFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trajectory_bound_check: Option<CheckFile>,
}

impl VerificationEntry {
    pub(crate) fn new(
        report: &CriterionReport,
        v: &BoundVerification,
        max_norm: f64,
        epsilon: f64,
        outcome: &str,
    ) -> Self {
        Self {
            criterion: report.criterion.name().to_owned(),
            verdict: report.verdict.name().to_owned(),
            history_norm: v.history_norm,
            hypothesis_met: v.hypothesis_met,
            max_norm,
            epsilon,
            outcome: outcome.to_owned(),
            epsilon_check: v.epsilon_check.as_ref().map(Into::into),
            trajectory_bound_check: v.trajectory_bound_check.as_ref().map(Into::into),
        }
    }
}

#[derive(Serialize)]
pub(crate) struct VerificationFile {
    pub step: f64,
    pub method: String,
    pub trajectory_csv_path: String,
    pub checks: Vec<VerificationEntry>,
}

/// Record of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: CommandKind,
    /// Config path or built-in example name.
    pub input: String,
    pub output_dir: String,
    /// Settings that differ from the defaults.
    pub tolerance_overrides: BTreeMap<String, f64>,
    pub exit_code: i32,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest always serializes")
    }
}
