//! Finite time stability criteria.
//!
//! Delay-dependent bound
//!
//! C1(t) = [(3^{1/α} q + (3^{1/α} Ψ + qΦ + ΨΦ) e^{(Ψ+q)t}) / (q + Ψ)]^{1/q}
//!
//! with Hölder exponents g = 1 + α, q = 1 + 1/α and
//!
//! V = (Γ(α²) / g^{α²})^{1/g}
//! Ψ = 3^{1/α} ((λ_A + L_f)^q + (λ_B + L_f)^q e^{−qτ}) V^q / Γ(α)^q
//! Φ = 3^{1/α} (λ_B + L_f)^q (1 − e^{−τq}) V^q / (q Γ(α)^q)
//!
//! and delay-independent bound
//!
//! C2(t) = (1 + (λ_S + 2L_f) t^α / Γ(α+1)) E_α((λ_S + 2L_f) t^α),
//! λ_S = σ_max(A) + σ_max(B).
//!
//! λ_A, λ_B are largest singular values. The system is finite time stable
//! with respect to (ξ, ε, T) when the bound stays below ε/ξ on [0, T]. A bound
//! that exceeds the threshold proves nothing, so the only verdicts are
//! "finite time stable" and "inconclusive".

use std::fmt;

use thiserror::Error;

use crate::special_functions::{gamma, mittag_leffler, SpecialError};
use crate::system_model::{PrintedConstants, StabilityQuery, SystemSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CriterionError {
    #[error("criterion evaluation needs at least 2 grid points, got {0}")]
    GridTooSmall(usize),
    #[error("alpha = {0} outside (0, 1)")]
    InvalidOrder(f64),
    #[error("homogeneous criteria need a system without nonlinearity")]
    NotHomogeneous,
    #[error(transparent)]
    Special(#[from] SpecialError),
}

pub type Result<T> = std::result::Result<T, CriterionError>;

/// Exponent arguments above this are treated as overflow.
pub const OVERFLOW_EXPONENT: f64 = 700.0;

pub const DEFAULT_GRID_POINTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    DelayDependent,
    DelayIndependent,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::DelayDependent => "delay_dependent",
            Criterion::DelayIndependent => "delay_independent",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    FiniteTimeStable,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::FiniteTimeStable => "finite_time_stable",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayDependentConstants {
    pub alpha: f64,
    pub g: f64,
    pub q: f64,
    pub v: f64,
    pub psi: f64,
    pub phi: f64,
    pub three_pow: f64,
    pub lam_a: f64,
    pub lam_b: f64,
    pub lf: f64,
}

/// C1(t)^q = additive + coefficient · e^{rate·t}
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C1Curve {
    pub additive: f64,
    pub coefficient: f64,
    pub rate: f64,
    pub q: f64,
}

impl DelayDependentConstants {
    /// Same exponents and norms with Ψ and Φ replaced.
    pub fn with_printed(&self, printed: PrintedConstants) -> Self {
        Self {
            psi: printed.psi,
            phi: printed.phi,
            ..*self
        }
    }

    pub fn curve(&self) -> C1Curve {
        let denom = self.q + self.psi;
        C1Curve {
            additive: self.three_pow * self.q / denom,
            coefficient: (self.three_pow * self.psi + self.q * self.phi + self.psi * self.phi) / denom,
            rate: self.psi + self.q,
            q: self.q,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayIndependentConstants {
    pub alpha: f64,
    pub lam_s: f64,
    pub lf: f64,
    /// λ_S + 2 L_f
    pub rate: f64,
}

impl DelayIndependentConstants {
    /// rate / Γ(α + 1), the factor in front of t^α.
    pub fn coefficient(&self) -> Result<f64> {
        Ok(self.rate / gamma(self.alpha + 1.0)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CriterionConstants {
    DelayDependent {
        formula: DelayDependentConstants,
        printed: Option<DelayDependentConstants>,
    },
    DelayIndependent(DelayIndependentConstants),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub criterion: Criterion,
    pub constants: CriterionConstants,
    /// (t, bound) on a uniform grid over [0, T], computed from the constants
    /// that decide the verdict (the printed ones when supplied).
    pub curve: Vec<(f64, f64)>,
    pub threshold: f64,
    pub verdict: Verdict,
    pub audit: Vec<String>,
    pub j_end: f64,
}

impl CriterionReport {
    pub fn is_stable(&self) -> bool {
        self.verdict == Verdict::FiniteTimeStable
    }

    pub fn bound_at_end(&self) -> f64 {
        self.curve.last().map_or(f64::NAN, |p| p.1)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CriterionError::InvalidOrder(alpha))
    }
}

/// (g, q) = (1 + α, 1 + 1/α)
pub fn holder_exponents(alpha: f64) -> (f64, f64) {
    (1.0 + alpha, 1.0 + 1.0 / alpha)
}

pub fn compute_v(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let (g, _) = holder_exponents(alpha);
    let a2 = alpha * alpha;
    Ok((gamma(a2)? / g.powf(a2)).powf(1.0 / g))
}

pub fn delay_dependent_constants(spec: &SystemSpec) -> Result<DelayDependentConstants> {
    let alpha = spec.alpha();
    check_alpha(alpha)?;
    let (g, q) = holder_exponents(alpha);
    let v = compute_v(alpha)?;
    let lam_a = spec.a().max_singular_value();
    let lam_b = spec.b().max_singular_value();
    let lf = spec.nonlinearity().lipschitz();
    let three_pow = 3f64.powf(1.0 / alpha);
    let scale = three_pow * v.powf(q) / gamma(alpha)?.powf(q);
    let tq = spec.tau() * q;
    let psi = scale * ((lam_a + lf).powf(q) + (lam_b + lf).powf(q) * (-tq).exp());
    let phi = scale * (lam_b + lf).powf(q) * (-(-tq).exp_m1()) / q;
    Ok(DelayDependentConstants {
        alpha,
        g,
        q,
        v,
        psi,
        phi,
        three_pow,
        lam_a,
        lam_b,
        lf,
    })
}

fn relative_gap(computed: f64, printed: f64) -> f64 {
    if printed == 0.0 {
        computed.abs()
    } else {
        ((computed - printed) / printed).abs()
    }
}

/// Formula-derived (Ψ, Φ), plus one audit note per quantity when printed
/// values are supplied.
pub fn compute_psi_phi(spec: &SystemSpec, printed: Option<PrintedConstants>) -> Result<((f64, f64), Vec<String>)> {
    let k = delay_dependent_constants(spec)?;
    let mut audit = Vec::new();
    if let Some(p) = printed {
        for (name, computed, shown) in [("Psi", k.psi, p.psi), ("Phi", k.phi, p.phi)] {
            let gap = relative_gap(computed, shown);
            let status = if gap <= 1e-3 { "agrees" } else { "DISCREPANCY" };
            audit.push(format!(
                "{name}: formula {computed:.6e}, printed {shown:e}, relative gap {gap:.3e} ({status})"
            ));
        }
    }
    Ok(((k.psi, k.phi), audit))
}

/// C1(t). Returns +inf once (Ψ + q) t exceeds [`OVERFLOW_EXPONENT`].
pub fn c1_bound(t: f64, k: &DelayDependentConstants) -> f64 {
    let c = k.curve();
    let exponent = c.rate * t;
    if exponent > OVERFLOW_EXPONENT || !exponent.is_finite() {
        return f64::INFINITY;
    }
    (c.additive + c.coefficient * exponent.exp()).powf(1.0 / c.q)
}

pub fn delay_independent_constants(spec: &SystemSpec) -> DelayIndependentConstants {
    let lam_s = spec.a().max_singular_value() + spec.b().max_singular_value();
    let lf = spec.nonlinearity().lipschitz();
    DelayIndependentConstants {
        alpha: spec.alpha(),
        lam_s,
        lf,
        rate: lam_s + 2.0 * lf,
    }
}

/// C2(t). The Mittag-Leffler factor evaluates to +inf past the `f64` range.
pub fn c2_bound(t: f64, k: &DelayIndependentConstants) -> Result<f64> {
    c2_from_parts(t, k.alpha, k.coefficient()?, k.rate)
}

/// (1 + coefficient · t^α) E_α(rate · t^α), for curves given by their
/// (possibly rounded) factors.
pub fn c2_from_parts(t: f64, alpha: f64, coefficient: f64, rate: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(1.0);
    }
    let ta = t.powf(alpha);
    Ok((1.0 + coefficient * ta) * mittag_leffler(alpha, rate * ta)?)
}

/// `points` uniform nodes on [0, j_end], the last one exactly j_end.
pub fn grid(j_end: f64, points: usize) -> impl Iterator<Item = f64> {
    let last = points - 1;
    (0..points).map(move |i| {
        if i == last {
            j_end
        } else {
            j_end * i as f64 / last as f64
        }
    })
}

fn verdict_of(curve: &[(f64, f64)], threshold: f64) -> Verdict {
    // NaN compares false and so counts as a violation
    if curve.iter().all(|&(_, b)| b <= threshold) {
        Verdict::FiniteTimeStable
    } else {
        Verdict::Inconclusive
    }
}

/// Samples the chosen bound on `grid_points` uniform points over [0, T]
/// and compares it with ε/ξ. When `printed` is given, the delay-dependent
/// verdict uses those Ψ, Φ; the formula-derived constants are always kept in
/// the report next to them.
///
/// The hypothesis ‖ω‖_C < ξ is a property of the initial data, not of the
/// bound; it is noted in the audit here and enforced when a trajectory is
/// checked against the bound.
pub fn evaluate_criterion(
    spec: &SystemSpec,
    query: &StabilityQuery,
    criterion: Criterion,
    grid_points: usize,
    printed: Option<PrintedConstants>,
) -> Result<CriterionReport> {
    if grid_points < 2 {
        return Err(CriterionError::GridTooSmall(grid_points));
    }
    let threshold = query.threshold();
    let j_end = query.j_end();
    let mut audit = Vec::new();
    let (constants, curve) = match criterion {
        Criterion::DelayDependent => {
            let formula = delay_dependent_constants(spec)?;
            let (_, notes) = compute_psi_phi(spec, printed)?;
            audit.extend(notes);
            let printed = printed.map(|p| formula.with_printed(p));
            let used = printed.unwrap_or(formula);
            let curve: Vec<_> = grid(j_end, grid_points).map(|t| (t, c1_bound(t, &used))).collect();
            if let Some(&(t, _)) = curve.iter().find(|p| p.1 == f64::INFINITY) {
                audit.push(format!(
                    "C1 exponent (Psi + q) t exceeds {OVERFLOW_EXPONENT} from t = {t:.6}; bound reported as +inf"
                ));
            }
            (CriterionConstants::DelayDependent { formula, printed }, curve)
        }
        Criterion::DelayIndependent => {
            let k = delay_independent_constants(spec);
            let curve = grid(j_end, grid_points)
                .map(|t| c2_bound(t, &k).map(|b| (t, b)))
                .collect::<Result<Vec<_>>>()?;
            if let Some(&(t, _)) = curve.iter().find(|p| p.1 == f64::INFINITY) {
                audit.push(format!(
                    "Mittag-Leffler factor exceeds the f64 range from t = {t:.6}; bound reported as +inf"
                ));
            }
            (CriterionConstants::DelayIndependent(k), curve)
        }
    };
    let norm = spec.history_sup_norm();
    if !(norm < query.xi()) {
        audit.push(format!(
            "initial data has sup norm {norm:e}, not below xi = {:e}; the verdict applies to data that meet the hypothesis",
            query.xi()
        ));
    }
    let verdict = verdict_of(&curve, threshold);
    Ok(CriterionReport {
        criterion,
        constants,
        curve,
        threshold,
        verdict,
        audit,
        j_end,
    })
}

/// The criteria for systems without nonlinearity, where L_f = 0.
pub fn homogeneous_criteria(
    spec: &SystemSpec,
    query: &StabilityQuery,
    criterion: Criterion,
    grid_points: usize,
) -> Result<CriterionReport> {
    if !spec.is_homogeneous() {
        return Err(CriterionError::NotHomogeneous);
    }
    evaluate_criterion(spec, query, criterion, grid_points, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_functions::MatrixNxN;
    use crate::system_model::{HistoryFunction, Nonlinearity, Shape};
    use crate::tempered_operators::TemperedOrder;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn spec(
        alpha: f64,
        rho: f64,
        tau: f64,
        horizon: f64,
        a: &[Vec<f64>],
        b: &[Vec<f64>],
        f: Nonlinearity,
    ) -> SystemSpec {
        let n = a.len();
        SystemSpec::new(
            TemperedOrder::relaxed(alpha, rho).unwrap(),
            tau,
            horizon,
            MatrixNxN::from_rows(a).unwrap(),
            MatrixNxN::from_rows(b).unwrap(),
            f,
            HistoryFunction::constant(vec![0.0; n]).unwrap(),
        )
        .unwrap()
    }

    fn zero_system(alpha: f64) -> SystemSpec {
        let z = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        spec(alpha, 0.5, 0.2, 3.0, &z, &z, Nonlinearity::none())
    }

    #[test]
    fn exponents() {
        let (g, q) = holder_exponents(0.3);
        assert_eq!(g, 1.3);
        assert!((q - 4.333_333_333_333_333).abs() < 1e-15);
        assert_eq!(holder_exponents(0.5), (1.5, 3.0));
        let (g, q) = holder_exponents(1.0 - 1e-12);
        assert!((g - 2.0).abs() < 1e-11 && (q - 2.0).abs() < 1e-11);
        for i in 1..100 {
            let (g, q) = holder_exponents(i as f64 / 100.0);
            assert!((1.0 / g + 1.0 / q - 1.0).abs() <= 1e-15);
        }
    }

    #[test]
    fn v_is_positive() {
        for i in 1..10 {
            assert!(compute_v(i as f64 / 10.0).unwrap() > 0.0);
        }
        assert!(compute_v(1.0).is_err());
    }

    #[test]
    fn zero_system_constants_vanish() {
        let k = delay_dependent_constants(&zero_system(0.4)).unwrap();
        assert_eq!((k.psi, k.phi), (0.0, 0.0));
        for &t in &[0.0, 1.0, 3.0] {
            assert!(rel(c1_bound(t, &k), 3f64.powf(1.0 / 1.4)) < 1e-14);
        }
    }

    #[test]
    fn printed_constants_reproduce_published_curve_factors() {
        let a = vec![vec![0.0, 0.2], vec![-0.15, 0.0]];
        let b = vec![vec![-0.1, 0.0], vec![0.0, -0.09]];
        let f = Nonlinearity::linear_combo(0.03, Shape::Identity, 0.03, Shape::SinElementwise, 0.03).unwrap();
        let s = spec(0.5, 0.5, 0.2, 4.0, &a, &b, f);
        let k = delay_dependent_constants(&s).unwrap().with_printed(PrintedConstants {
            psi: 0.0075,
            phi: 1.8486e-4,
        });
        let c = k.curve();
        assert!((c.additive - 8.9776).abs() < 5e-5);
        assert!((c.rate - 3.0075).abs() < 1e-12);
        assert_eq!(k.three_pow, 9.0);
    }

    #[test]
    fn c2_at_zero_and_rate() {
        let a = vec![vec![0.0, 0.2], vec![-0.15, 0.0]];
        let b = vec![vec![-0.1, 0.0], vec![0.0, -0.09]];
        let f = Nonlinearity::linear_combo(0.03, Shape::Identity, 0.03, Shape::SinElementwise, 0.03).unwrap();
        let k = delay_independent_constants(&spec(0.5, 0.5, 0.2, 4.0, &a, &b, f));
        assert!(rel(k.rate, 0.36) < 1e-12);
        assert_eq!(c2_bound(0.0, &k).unwrap(), 1.0);
    }

    #[test]
    fn zero_system_c2_is_one_and_stable() {
        let s = zero_system(0.5);
        let q = StabilityQuery::new(0.1, 0.1, 3.0).unwrap();
        let r = homogeneous_criteria(&s, &q, Criterion::DelayIndependent, 50).unwrap();
        assert!(r.curve.iter().all(|p| p.1 == 1.0));
        assert!(r.is_stable());
    }

    #[test]
    fn homogeneous_rejects_nonlinear_system() {
        let a = vec![vec![-1.0]];
        let f = Nonlinearity::linear_combo(0.1, Shape::Identity, 0.0, Shape::Identity, 0.1).unwrap();
        let s = spec(0.5, 0.5, 0.2, 1.0, &a, &a, f);
        let q = StabilityQuery::new(0.1, 1.0, 1.0).unwrap();
        assert_eq!(
            homogeneous_criteria(&s, &q, Criterion::DelayIndependent, 10).unwrap_err(),
            CriterionError::NotHomogeneous
        );
    }

    #[test]
    fn overflow_is_flagged_and_inconclusive() {
        let a = vec![vec![-2.0, 0.0], vec![0.0, -2.0]];
        let b = vec![vec![3.0, -4.0], vec![0.0, 0.0]];
        let f = Nonlinearity::linear_combo(2.0, Shape::SinElementwise, -3.0, Shape::SinElementwise, 3.0).unwrap();
        let s = spec(0.3, 0.8, 0.2, 3.0, &a, &b, f);
        let q = StabilityQuery::new(0.01, 0.6, 3.0).unwrap();
        let r = evaluate_criterion(&s, &q, Criterion::DelayDependent, 100, None).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert_eq!(r.bound_at_end(), f64::INFINITY);
        assert!(r.audit.iter().any(|n| n.contains("+inf")));
    }

    #[test]
    fn grid_size_checked() {
        let s = zero_system(0.5);
        let q = StabilityQuery::new(0.1, 1.0, 3.0).unwrap();
        assert!(evaluate_criterion(&s, &q, Criterion::DelayIndependent, 1, None).is_err());
        let r = evaluate_criterion(&s, &q, Criterion::DelayDependent, 2, None).unwrap();
        assert_eq!(r.curve.len(), 2);
        assert_eq!(r.curve[1].0, 3.0);
    }

    fn dd_constants() -> impl Strategy<Value = DelayDependentConstants> {
        (0.05f64..0.95, 0.0f64..50.0, 0.0f64..50.0).prop_map(|(alpha, psi, phi)| {
            let (g, q) = holder_exponents(alpha);
            DelayDependentConstants {
                alpha,
                g,
                q,
                v: 1.0,
                psi,
                phi,
                three_pow: 3f64.powf(1.0 / alpha),
                lam_a: 0.0,
                lam_b: 0.0,
                lf: 0.0,
            }
        })
    }

    proptest! {
        #[test]
        fn c1_nondecreasing(k in dd_constants(), horizon in 0.1f64..10.0) {
            let mut last = 0.0;
            for t in grid(horizon, 1000) {
                let b = c1_bound(t, &k);
                prop_assert!(b >= last, "t={} b={} last={}", t, b, last);
                last = b;
            }
        }

        #[test]
        fn c2_nondecreasing(alpha in 0.1f64..0.95, rate in 0.0f64..5.0, horizon in 0.1f64..5.0) {
            let k = DelayIndependentConstants { alpha, lam_s: rate, lf: 0.0, rate };
            let mut last = 0.0;
            for t in grid(horizon, 1000) {
                let b = c2_bound(t, &k).unwrap();
                prop_assert!(b >= last, "t={} b={} last={}", t, b, last);
                last = b;
            }
        }

        #[test]
        fn threshold_scaling_keeps_verdict(d in 0.0f64..2.0, xi in 0.01f64..1.0, ratio in 1.0f64..50.0, scale in 0.1f64..10.0) {
            let s = spec(0.5, 0.5, 0.2, 2.0, &[vec![d]], &[vec![d / 2.0]], Nonlinearity::none());
            let base = StabilityQuery::new(xi, xi * ratio, 2.0).unwrap();
            let scaled = StabilityQuery::new(xi * scale, xi * ratio * scale, 2.0).unwrap();
            let r1 = evaluate_criterion(&s, &base, Criterion::DelayIndependent, 50, None).unwrap();
            let r2 = evaluate_criterion(&s, &scaled, Criterion::DelayIndependent, 50, None).unwrap();
            // ε/ξ can move by an ulp under scaling, so skip knife-edge cases
            prop_assume!((r1.bound_at_end() - r1.threshold).abs() > 1e-12 * r1.threshold);
            prop_assert_eq!(r1.verdict, r2.verdict);
        }

        #[test]
        fn verdict_agrees_with_endpoint(d in 0.0f64..3.0, ratio in 1.0f64..30.0) {
            let s = spec(0.4, 0.5, 0.3, 2.0, &[vec![d]], &[vec![d]], Nonlinearity::none());
            let q = StabilityQuery::new(0.1, 0.1 * ratio, 2.0).unwrap();
            for c in [Criterion::DelayDependent, Criterion::DelayIndependent] {
                let r = evaluate_criterion(&s, &q, c, 200, None).unwrap();
                prop_assert_eq!(r.is_stable(), r.bound_at_end() <= r.threshold);
            }
        }
    }
}
