//! One-parameter Mittag-Leffler function E_α(z) = Σ zⁿ / Γ(αn + 1) for
//! real z and α ∈ (0, 1].
//!
//! Two branches:
//! - power series with compensated summation for moderate arguments;
//! - the exponential asymptotic expansion
//!   E_α(z) ≈ (1/α)·exp(z^{1/α}) − Σ_{k=1..K} z^{−k} / Γ(1 − αk)
//!   for large positive arguments, and its algebraic part alone for large
//!   negative ones.
//!
//! Positive arguments whose value exceeds the `f64` range evaluate to
//! `+inf` rather than an error; the stability bounds treat that as an
//! automatically violated threshold.
//!
//! For large negative arguments the expansion drops the exponentially small
//! oscillatory contributions, which is accurate when α is well below 1
//! (α = 1 is special-cased to `exp`).

use super::gamma::{ln_gamma_positive, recip_gamma};
use super::{CompensatedSum, Result, SpecialError};

/// Above this value of z^{1/α} the exponential term dominates the algebraic
/// tail by more than 1e13 and the asymptotic branch is used even when z is
/// below `argument_switch`.
const ASYMPTOTIC_LEAD_EXPONENT: f64 = 30.0;

const LN_F64_MAX: f64 = 709.782_712_893_384;

/// Cap on the number of algebraic terms in the asymptotic expansion.
const ASYMPTOTIC_TERM_CAP: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlEvalPolicy {
    pub series_term_cap: usize,
    pub series_rel_tol: f64,
    /// Threshold on |z| above which the asymptotic branch is used.
    pub argument_switch: f64,
}

impl Default for MlEvalPolicy {
    fn default() -> Self {
        Self {
            series_term_cap: 400,
            series_rel_tol: 1e-12,
            argument_switch: 10.0,
        }
    }
}

impl MlEvalPolicy {
    pub fn new(series_term_cap: usize, series_rel_tol: f64, argument_switch: f64) -> Result<Self> {
        if series_term_cap < 50 {
            return Err(SpecialError::Domain {
                function: "MlEvalPolicy",
                value: series_term_cap as f64,
                requirement: "series_term_cap >= 50",
            });
        }
        if !(series_rel_tol > 0.0 && series_rel_tol <= 1e-6) {
            return Err(SpecialError::Domain {
                function: "MlEvalPolicy",
                value: series_rel_tol,
                requirement: "series_rel_tol in (0, 1e-6]",
            });
        }
        if !(argument_switch > 0.0) || !argument_switch.is_finite() {
            return Err(SpecialError::Domain {
                function: "MlEvalPolicy",
                value: argument_switch,
                requirement: "argument_switch > 0",
            });
        }
        Ok(Self {
            series_term_cap,
            series_rel_tol,
            argument_switch,
        })
    }
}

/// E_α(z) with the default evaluation policy.
pub fn mittag_leffler(alpha: f64, z: f64) -> Result<f64> {
    mittag_leffler_with(alpha, z, &MlEvalPolicy::default())
}

pub fn mittag_leffler_with(alpha: f64, z: f64, policy: &MlEvalPolicy) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(SpecialError::Domain {
            function: "mittag_leffler",
            value: alpha,
            requirement: "alpha in (0, 1]",
        });
    }
    if z.is_nan() {
        return Err(SpecialError::Domain {
            function: "mittag_leffler",
            value: z,
            requirement: "z not NaN",
        });
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if z > 0.0 {
        if z == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        let lead = z.powf(1.0 / alpha);
        if lead - alpha.ln() > LN_F64_MAX {
            return Ok(f64::INFINITY);
        }
        if z > policy.argument_switch || lead >= ASYMPTOTIC_LEAD_EXPONENT {
            return asymptotic(alpha, z, policy);
        }
        return series_or_asymptotic(alpha, z, policy);
    }
    if -z > policy.argument_switch {
        if alpha == 1.0 {
            return Ok(z.exp());
        }
        return asymptotic(alpha, z, policy);
    }
    series_or_asymptotic(alpha, z, policy)
}

/// Small orders make the series converge slowly; when it runs out of terms
/// the asymptotic branch is tried before giving up.
fn series_or_asymptotic(alpha: f64, z: f64, policy: &MlEvalPolicy) -> Result<f64> {
    match series(alpha, z, policy) {
        Err(err @ SpecialError::NonConvergence { .. }) => asymptotic(alpha, z, policy).map_err(|_| err),
        other => other,
    }
}

fn series_term(alpha: f64, z: f64, n: usize) -> f64 {
    let arg = alpha * n as f64 + 1.0;
    let log_pow = n as f64 * z.abs().ln();
    if arg <= 170.0 && log_pow < 700.0 {
        z.powi(n as i32) * recip_gamma(arg)
    } else {
        let magnitude = (log_pow - ln_gamma_positive(arg)).exp();
        if z < 0.0 && n % 2 == 1 {
            -magnitude
        } else {
            magnitude
        }
    }
}

pub(crate) fn series(alpha: f64, z: f64, policy: &MlEvalPolicy) -> Result<f64> {
    let mut acc = CompensatedSum::default();
    acc.add(1.0);
    let mut previous = 1.0f64;
    for n in 1..policy.series_term_cap {
        let term = series_term(alpha, z, n);
        acc.add(term);
        let total = acc.value();
        if !total.is_finite() {
            return Ok(total);
        }
        if term.abs() <= policy.series_rel_tol * total.abs() && term.abs() <= previous.abs() {
            return Ok(total);
        }
        previous = term;
    }
    Err(SpecialError::NonConvergence {
        alpha,
        z,
        terms: policy.series_term_cap,
    })
}

pub(crate) fn asymptotic(alpha: f64, z: f64, policy: &MlEvalPolicy) -> Result<f64> {
    let lead = if z > 0.0 {
        (z.powf(1.0 / alpha)).exp() / alpha
    } else {
        0.0
    };
    let mut tail = CompensatedSum::default();
    let mut smallest = f64::INFINITY;
    let inv = 1.0 / z;
    let mut inv_pow = 1.0;
    for k in 1..=ASYMPTOTIC_TERM_CAP {
        inv_pow *= inv;
        let term = inv_pow * recip_gamma(1.0 - alpha * k as f64);
        if term == 0.0 {
            // pole of Γ(1 − αk); the term vanishes identically
            continue;
        }
        if !term.is_finite() || term.abs() > 1e3 * smallest {
            // the expansion has started to diverge
            break;
        }
        smallest = smallest.min(term.abs());
        tail.add(term);
        if term.abs() <= 1e-17 * lead.abs().max(tail.value().abs()) {
            break;
        }
    }
    let value = lead - tail.value();
    let remainder = if smallest.is_finite() { smallest } else { 0.0 };
    if remainder > policy.series_rel_tol.max(1e-9) * value.abs() {
        return Err(SpecialError::NonConvergence {
            alpha,
            z,
            terms: ASYMPTOTIC_TERM_CAP,
        });
    }
    Ok(value)
}
