//! Tempered fractional delay systems
//!
//! ᵀD^{α,ρ} y(t) = e^{−ρt} (A y(t) + B y(t − τ) + f(t, y(t), y(t − τ))),
//! y(t) = ω(t) on [−τ, 0],
//!
//! together with the stability query (ξ, ε, T) and the configuration
//! document format.

mod document;
mod history;
mod nonlinearity;

pub use document::{parse_system, serialize_system, SystemDocument};
pub use history::HistoryFunction;
pub use nonlinearity::{validate_lipschitz, LipschitzReport, Nonlinearity, NonlinearityKind, Shape};

use std::fmt;

use thiserror::Error;

use crate::special_functions::MatrixNxN;
use crate::tempered_operators::TemperedOrder;

/// One problem with one field of a system description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("malformed document: {0}")]
    Parse(String),
    #[error("invalid system: {}", join(.0))]
    Validation(Vec<Diagnostic>),
}

fn join(d: &[Diagnostic]) -> String {
    d.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl ModelError {
    pub(crate) fn check(diags: Vec<Diagnostic>) -> Result<(), ModelError> {
        if diags.is_empty() {
            Ok(())
        } else {
            Err(ModelError::Validation(diags))
        }
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            ModelError::Validation(d) => d,
            ModelError::Parse(_) => &[],
        }
    }

    fn into_diagnostics(self) -> Vec<Diagnostic> {
        match self {
            ModelError::Validation(d) => d,
            ModelError::Parse(m) => vec![Diagnostic::new("document", m)],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    order: TemperedOrder,
    tau: f64,
    horizon: f64,
    a: MatrixNxN,
    b: MatrixNxN,
    f: Nonlinearity,
    history: HistoryFunction,
}

impl SystemSpec {
    pub fn new(
        order: TemperedOrder,
        tau: f64,
        horizon: f64,
        a: MatrixNxN,
        b: MatrixNxN,
        f: Nonlinearity,
        history: HistoryFunction,
    ) -> Result<Self, ModelError> {
        let mut diags = Vec::new();
        if !(tau > 0.0) || !tau.is_finite() {
            diags.push(Diagnostic::new(
                "tau",
                format!("must be positive and finite, got {tau}"),
            ));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            diags.push(Diagnostic::new(
                "horizon",
                format!("must be positive and finite, got {horizon}"),
            ));
        }
        let n = a.order();
        if b.order() != n {
            diags.push(Diagnostic::new(
                "B",
                format!("has order {}, A has order {n}", b.order()),
            ));
        }
        if history.dim() != n {
            diags.push(Diagnostic::new(
                "history",
                format!("has dimension {}, A has order {n}", history.dim()),
            ));
        }
        if let Some(times) = history.sample_times() {
            let slack = 1e-12 * tau.abs().max(1.0);
            if let Some(i) = times.iter().position(|&s| s < -tau - slack || s > slack) {
                diags.push(Diagnostic::new(
                    format!("history.times[{i}]"),
                    format!("{} lies outside [-tau, 0]", times[i]),
                ));
            }
        }
        ModelError::check(diags)?;
        Ok(Self {
            order,
            tau,
            horizon,
            a,
            b,
            f,
            history,
        })
    }

    pub fn order(&self) -> TemperedOrder {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.order.alpha()
    }

    pub fn rho(&self) -> f64 {
        self.order.rho()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Final time T.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn a(&self) -> &MatrixNxN {
        &self.a
    }

    pub fn b(&self) -> &MatrixNxN {
        &self.b
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.f
    }

    pub fn history(&self) -> &HistoryFunction {
        &self.history
    }

    pub fn dim(&self) -> usize {
        self.a.order()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.f.is_none()
    }

    /// ‖ω‖_C over [−τ, 0].
    pub fn history_sup_norm(&self) -> f64 {
        history_sup_norm(&self.history, self.tau)
    }

    /// Accepted but questionable settings.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.tau >= self.horizon {
            out.push(format!(
                "tau = {} is not below the horizon {}; the delayed term only reads the history",
                self.tau, self.horizon
            ));
        }
        out
    }

    /// A·y + B·y_τ + f(y, y_τ), written into `out`.
    pub fn rhs_into(&self, y: &[f64], y_delayed: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.a.get(i, j) * y[j] + self.b.get(i, j) * y_delayed[j];
            }
            *o = acc;
        }
        self.f.accumulate(y, y_delayed, out);
    }
}

pub fn history_sup_norm(h: &HistoryFunction, tau: f64) -> f64 {
    h.sup_norm(tau)
}

/// Finite time stability question: does ‖ω‖_C < ξ imply ‖y(t)‖ < ε on
/// [0, J_end]? J_end is the system horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityQuery {
    xi: f64,
    epsilon: f64,
    j_end: f64,
}

impl StabilityQuery {
    pub fn new(xi: f64, epsilon: f64, j_end: f64) -> Result<Self, ModelError> {
        let mut diags = Vec::new();
        if !(xi > 0.0) || !xi.is_finite() {
            diags.push(Diagnostic::new(
                "query.xi",
                format!("must be positive and finite, got {xi}"),
            ));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            diags.push(Diagnostic::new(
                "query.epsilon",
                format!("must be positive and finite, got {epsilon}"),
            ));
        }
        if xi > epsilon {
            diags.push(Diagnostic::new(
                "query.xi",
                format!("xi = {xi} exceeds epsilon = {epsilon}"),
            ));
        }
        if !(j_end > 0.0) || !j_end.is_finite() {
            diags.push(Diagnostic::new(
                "horizon",
                format!("must be positive and finite, got {j_end}"),
            ));
        }
        ModelError::check(diags)?;
        Ok(Self { xi, epsilon, j_end })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn j_end(&self) -> f64 {
        self.j_end
    }

    /// ε/ξ, the bound each criterion curve is compared against.
    pub fn threshold(&self) -> f64 {
        self.epsilon / self.xi
    }
}

/// Rounded values of the delay-dependent constants (Ψ, Φ) as published
/// alongside an example, used to reproduce published curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrintedConstants {
    pub psi: f64,
    pub phi: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order() -> TemperedOrder {
        TemperedOrder::new(0.5, 0.5).unwrap()
    }

    #[test]
    fn dimension_mismatch_names_fields() {
        let err = SystemSpec::new(
            order(),
            0.2,
            4.0,
            MatrixNxN::identity(2),
            MatrixNxN::identity(3),
            Nonlinearity::none(),
            HistoryFunction::constant(vec![0.0]).unwrap(),
        )
        .unwrap_err();
        let fields: Vec<_> = err.diagnostics().iter().map(|d| d.field.as_str()).collect();
        assert_eq!(fields, ["B", "history"]);
    }

    #[test]
    fn long_delay_is_flagged_not_rejected() {
        let s = SystemSpec::new(
            order(),
            5.0,
            4.0,
            MatrixNxN::identity(1),
            MatrixNxN::identity(1),
            Nonlinearity::none(),
            HistoryFunction::constant(vec![0.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(s.warnings().len(), 1);
    }

    #[test]
    fn sampled_history_must_lie_on_delay_interval() {
        let r = SystemSpec::new(
            order(),
            0.2,
            4.0,
            MatrixNxN::identity(1),
            MatrixNxN::identity(1),
            Nonlinearity::none(),
            HistoryFunction::sampled(vec![-0.5, 0.0], vec![vec![0.0], vec![1.0]]).unwrap(),
        );
        assert!(r.unwrap_err().to_string().contains("history.times[0]"));
    }

    #[test]
    fn query_invariants() {
        assert!(StabilityQuery::new(0.01, 0.6, 3.0).is_ok());
        assert!(StabilityQuery::new(0.2, 0.2, 3.0).is_ok());
        let err = StabilityQuery::new(0.7, 0.6, 3.0).unwrap_err();
        assert_eq!(err.diagnostics()[0].field, "query.xi");
        assert!(StabilityQuery::new(0.0, 0.6, 3.0).is_err());
        assert!((StabilityQuery::new(0.02, 0.2, 4.0).unwrap().threshold() - 10.0).abs() < 1e-14);
    }
}
