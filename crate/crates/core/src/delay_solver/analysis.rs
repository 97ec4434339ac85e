use super::{delayed_state, solve, DelayGridPolicy, Result, SolverConfig, SolverError, Trajectory};
use crate::special_functions::gamma;
use crate::stability_criteria::{c2_bound, delay_independent_constants, Criterion, CriterionReport};
use crate::system_model::{StabilityQuery, SystemSpec};
use crate::tempered_operators::{tempered_derivative_all, OperatorError, SampledFunction};

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation {
    pub h: f64,
    pub max_discrepancy: f64,
    pub at_index: usize,
}

/// Runs both methods at the same step and reports their largest pointwise
/// max-norm difference.
pub fn cross_validate(spec: &SystemSpec, cfg: &SolverConfig) -> Result<CrossValidation> {
    use super::Method::*;
    let a = solve(spec, &cfg.with_method(TemperedProductIntegration))?;
    let b = solve(spec, &cfg.with_method(ExpTransformCaputo))?;
    let (mut worst, mut at) = (0.0, 0);
    for (i, (x, y)) in a.states.iter().zip(&b.states).enumerate() {
        let d = max_diff(x, y);
        if d > worst {
            worst = d;
            at = i;
        }
    }
    Ok(CrossValidation {
        h: a.h,
        max_discrepancy: worst,
        at_index: at,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub max_residual: f64,
    pub at_index: usize,
    /// Residual per interior node, entry i − 1 for node i.
    pub residuals: Vec<f64>,
}

/// Plugs the trajectory back into ᵀD^{α,ρ} y = e^{−ρt}(A y + B y_τ + f)
/// and reports the largest max-norm mismatch at interior nodes.
///
/// Derivative samples come from second-order differences. Solutions behave
/// like ω(0) + e^{−ρt} G(0) t^α / Γ(α+1) near t = 0, whose derivative is
/// unbounded; that term has a known tempered derivative e^{−ρt} G(0) and is
/// removed before differencing.
pub fn residual_check(traj: &Trajectory, spec: &SystemSpec) -> Result<ResidualReport> {
    let n = traj.len();
    if n < 3 {
        return Ok(ResidualReport {
            max_residual: 0.0,
            at_index: 0,
            residuals: Vec::new(),
        });
    }
    let (h, m, rho, alpha) = (traj.h, traj.delay_steps, spec.rho(), spec.alpha());
    let dim = spec.dim();
    let mut yd = vec![0.0; dim];
    let g: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            delayed_state(spec, h, m, i, &traj.states, &mut yd);
            let mut out = vec![0.0; dim];
            spec.rhs_into(&traj.states[i], &yd, &mut out);
            out
        })
        .collect();
    let g0 = &g[0];
    let z0 = &traj.states[0];
    let c = 1.0 / gamma(alpha + 1.0).map_err(OperatorError::from)?;
    let r: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let t = traj.grid[i];
            let (grow, ta) = ((rho * t).exp(), t.powf(alpha));
            (0..dim)
                .map(|k| grow * traj.states[i][k] - z0[k] - g0[k] * c * ta)
                .collect()
        })
        .collect();
    let dr: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..dim)
                .map(|k| {
                    let v = |j: usize| r[j][k];
                    if i == 0 {
                        (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h)
                    } else if i == n - 1 {
                        (3.0 * v(i) - 4.0 * v(i - 1) + v(i - 2)) / (2.0 * h)
                    } else {
                        (v(i + 1) - v(i - 1)) / (2.0 * h)
                    }
                })
                .collect()
        })
        .collect();
    let decay: Vec<f64> = traj.grid.iter().map(|t| (-rho * t).exp()).collect();
    let v = (0..n).map(|i| r[i].iter().map(|x| decay[i] * x).collect()).collect();
    let dv = (0..n)
        .map(|i| (0..dim).map(|k| decay[i] * (dr[i][k] - rho * r[i][k])).collect())
        .collect();
    let sampled = SampledFunction::new(0.0, h, v)?.with_derivatives(dv)?;
    let derivative = tempered_derivative_all(&sampled, spec.order())?;

    let mut residuals = Vec::with_capacity(n - 2);
    let (mut worst, mut at) = (0.0, 0);
    for i in 1..n - 1 {
        let res = (0..dim)
            .map(|k| (decay[i] * g0[k] + derivative[i - 1][k] - decay[i] * g[i][k]).abs())
            .fold(0.0, f64::max);
        if res > worst {
            worst = res;
            at = i;
        }
        residuals.push(res);
    }
    Ok(ResidualReport {
        max_residual: worst,
        at_index: at,
        residuals,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    pub steps: Vec<f64>,
    /// Max-norm error against the reference on the coarsest grid's nodes.
    pub errors: Vec<f64>,
    /// Least-squares slope of log error against log step; `None` when every
    /// error is zero.
    pub order: Option<f64>,
    /// Orders between consecutive steps.
    pub local_orders: Vec<f64>,
    pub reference_step: f64,
    pub warning: Option<String>,
}

impl OrderReport {
    pub fn is_exact(&self) -> bool {
        self.errors.iter().all(|&e| e == 0.0)
    }
}

/// Observed convergence order over a halving sequence of steps, against a
/// reference run at a quarter of the finest step.
pub fn empirical_order(spec: &SystemSpec, steps: &[f64], base: &SolverConfig) -> Result<OrderReport> {
    if steps.len() < 4 {
        return Err(SolverError::InvalidConfig(format!(
            "order estimation needs at least 3 halvings (4 steps), got {}",
            steps.len()
        )));
    }
    for w in steps.windows(2) {
        if ((w[0] / w[1]) - 2.0).abs() > 1e-9 {
            return Err(SolverError::InvalidConfig(format!(
                "steps {} and {} are not a halving",
                w[0], w[1]
            )));
        }
    }
    let cfg = |h: f64| SolverConfig {
        h,
        delay_grid_policy: DelayGridPolicy::RequireDivisible,
        ..*base
    };
    let h_ref = steps[steps.len() - 1] / 4.0;
    let reference = solve(spec, &cfg(h_ref))?;
    let runs = steps
        .iter()
        .map(|&h| solve(spec, &cfg(h)))
        .collect::<Result<Vec<_>>>()?;
    let coarse = runs[0].h;
    let stride = |t: &Trajectory| (coarse / t.h).round() as usize;
    let nodes = runs
        .iter()
        .chain(std::iter::once(&reference))
        .map(|t| (t.len() - 1) / stride(t))
        .min()
        .unwrap_or(0);
    let s_ref = stride(&reference);
    let errors: Vec<f64> = runs
        .iter()
        .map(|t| {
            let s = stride(t);
            (0..=nodes)
                .map(|k| max_diff(&t.states[k * s], &reference.states[k * s_ref]))
                .fold(0.0, f64::max)
        })
        .collect();

    let logs: Vec<(f64, f64)> = steps
        .iter()
        .zip(&errors)
        .filter(|(_, &e)| e > 0.0)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    let order = (logs.len() >= 2).then(|| {
        let k = logs.len() as f64;
        let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
        let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    let local_orders = errors.windows(2).map(|e| (e[0] / e[1]).log2()).collect();
    let warning = errors.windows(2).position(|e| e[1] > e[0]).map(|i| {
        format!(
            "error grows from {:e} to {:e} when the step is halved to {}",
            errors[i],
            errors[i + 1],
            steps[i + 1]
        )
    });
    Ok(OrderReport {
        steps: steps.to_vec(),
        errors,
        order,
        local_orders,
        reference_step: h_ref,
        warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub index: usize,
    pub time: f64,
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub passed: bool,
    pub first_violation: Option<Violation>,
    /// Largest value / limit over the trajectory.
    pub worst_ratio: f64,
}

impl BoundCheck {
    fn run(values: impl Iterator<Item = (usize, f64, f64, f64)>, strict: bool) -> Self {
        let mut first_violation = None;
        let mut worst_ratio = 0.0f64;
        for (index, time, value, limit) in values {
            let bad = if strict { !(value < limit) } else { !(value <= limit) };
            if bad && first_violation.is_none() {
                first_violation = Some(Violation {
                    index,
                    time,
                    value,
                    limit,
                });
            }
            if limit > 0.0 {
                worst_ratio = worst_ratio.max(value / limit);
            } else if value > 0.0 {
                worst_ratio = f64::INFINITY;
            }
        }
        Self {
            passed: first_violation.is_none(),
            first_violation,
            worst_ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundVerification {
    pub history_norm: f64,
    /// ‖ω‖_C < ξ
    pub hypothesis_met: bool,
    /// ‖y(t)‖ < ε; checked when the verdict was stable and the hypothesis
    /// holds.
    pub epsilon_check: Option<BoundCheck>,
    /// ‖y(t)‖ ≤ ‖ω‖_C · C2(t); checked for the delay-independent criterion.
    pub trajectory_bound_check: Option<BoundCheck>,
}

impl BoundVerification {
    /// No applicable check failed.
    pub fn passed(&self) -> bool {
        self.epsilon_check.as_ref().is_none_or(|c| c.passed)
            && self.trajectory_bound_check.as_ref().is_none_or(|c| c.passed)
    }
}

/// Relative slack allowed on the trajectory bound.
const TRAJECTORY_BOUND_SLACK: f64 = 1e-6;

/// Checks a computed trajectory against the promises of a criterion report.
pub fn verify_bound(
    traj: &Trajectory,
    spec: &SystemSpec,
    query: &StabilityQuery,
    report: &CriterionReport,
) -> Result<BoundVerification> {
    let history_norm = spec.history_sup_norm();
    let hypothesis_met = history_norm < query.xi();
    let epsilon_check = (report.is_stable() && hypothesis_met).then(|| {
        BoundCheck::run(
            traj.norm_track
                .iter()
                .enumerate()
                .map(|(i, &v)| (i, traj.grid[i], v, query.epsilon())),
            true,
        )
    });
    let trajectory_bound_check = if report.criterion == Criterion::DelayIndependent {
        let k = delay_independent_constants(spec);
        let limits = traj
            .grid
            .iter()
            .map(|&t| c2_bound(t, &k))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Some(BoundCheck::run(
            traj.norm_track.iter().enumerate().map(|(i, &v)| {
                // an overflowed bound promises nothing, even for zero data
                let limit = if limits[i] == f64::INFINITY {
                    f64::INFINITY
                } else {
                    history_norm * limits[i] * (1.0 + TRAJECTORY_BOUND_SLACK)
                };
                (i, traj.grid[i], v, limit)
            }),
            false,
        ))
    } else {
        None
    };
    Ok(BoundVerification {
        history_norm,
        hypothesis_met,
        epsilon_check,
        trajectory_bound_check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_functions::MatrixNxN;
    use crate::system_model::{HistoryFunction, Nonlinearity};
    use crate::tempered_operators::TemperedOrder;

    fn linear(alpha: f64, rho: f64, a: f64, b: f64, v: f64) -> SystemSpec {
        SystemSpec::new(
            TemperedOrder::new(alpha, rho).unwrap(),
            0.25,
            1.0,
            MatrixNxN::from_rows(&[vec![a]]).unwrap(),
            MatrixNxN::from_rows(&[vec![b]]).unwrap(),
            Nonlinearity::none(),
            HistoryFunction::constant(vec![v]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_system() {
        let spec = linear(0.5, 0.5, -1.0, 0.3, 0.0);
        let cfg = SolverConfig::with_step(0.01);
        assert_eq!(cross_validate(&spec, &cfg).unwrap().max_discrepancy, 0.0);
        let traj = solve(&spec, &cfg).unwrap();
        assert_eq!(residual_check(&traj, &spec).unwrap().max_residual, 0.0);
        let r = empirical_order(&spec, &[0.05, 0.025, 0.0125, 0.00625], &cfg).unwrap();
        assert!(r.is_exact());
        assert_eq!(r.order, None);
    }

    #[test]
    fn pure_decay_residual() {
        let spec = linear(0.4, 0.8, 0.0, 0.0, 1.3);
        let traj = solve(&spec, &SolverConfig::with_step(0.005)).unwrap();
        assert!(residual_check(&traj, &spec).unwrap().max_residual <= 1e-6);
    }

    #[test]
    fn residual_shrinks_with_step() {
        let spec = linear(0.5, 0.5, -0.8, 0.3, 1.0);
        let mut last = f64::INFINITY;
        for h in [0.01, 0.005, 0.0025] {
            let traj = solve(&spec, &SolverConfig::with_step(h)).unwrap();
            let r = residual_check(&traj, &spec).unwrap().max_residual;
            assert!(r <= last, "h = {h}: {r} after {last}");
            last = r;
        }
        assert!(last < 5e-3);
    }

    #[test]
    fn overflowed_bound_accepts_zero_data() {
        let spec = linear(0.5, 0.5, -900.0, 900.0, 0.0);
        let query = StabilityQuery::new(0.01, 0.6, 1.0).unwrap();
        let report = crate::stability_criteria::evaluate_criterion(
            &spec,
            &query,
            crate::stability_criteria::Criterion::DelayIndependent,
            50,
            None,
        )
        .unwrap();
        assert_eq!(report.bound_at_end(), f64::INFINITY);
        let traj = solve(&spec, &SolverConfig::with_step(0.01)).unwrap();
        let v = verify_bound(&traj, &spec, &query, &report).unwrap();
        assert!(v.passed(), "{v:?}");
    }

    #[test]
    fn order_needs_halvings() {
        let spec = linear(0.5, 0.5, -1.0, 0.0, 1.0);
        let cfg = SolverConfig::default();
        assert!(empirical_order(&spec, &[0.05, 0.025, 0.0125], &cfg).is_err());
        assert!(empirical_order(&spec, &[0.05, 0.025, 0.01, 0.005], &cfg).is_err());
    }
}
