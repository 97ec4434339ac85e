//! Numerical solution of the tempered fractional delay system.
//!
//! The mild solution reads
//!
//! y(t) = e^{−ρt} ω(0) + ᵀI^{α,ρ}[e^{−ρ·} G](t),  G(s) = A y(s) + B y(s−τ) + f(s, y(s), y(s−τ)).
//!
//! Since e^{−ρ(t−s)} e^{−ρs} = e^{−ρt}, the function z = e^{ρt} y solves the
//! Caputo delay problem ᶜD^α z = G with z(0) = ω(0). Two discretizations are
//! provided:
//!
//! - [`Method::TemperedProductIntegration`] works on y directly, with the
//!   tempered kernel's exponential sampled at the nodes;
//! - [`Method::ExpTransformCaputo`] integrates the Caputo system for z, with G
//!   rewritten in z, and maps back.
//!
//! Both use the same predictor-corrector family on a grid where τ is a whole
//! number of steps, so delayed values are either grid values or exact
//! history values.

mod analysis;
mod engine;

pub use analysis::{
    cross_validate, empirical_order, residual_check, verify_bound, BoundCheck, BoundVerification, CrossValidation,
    OrderReport, ResidualReport, Violation,
};

use std::io::{self, Write};

use thiserror::Error;

use crate::stability_criteria::CriterionError;
use crate::system_model::SystemSpec;
use crate::tempered_operators::{OperatorError, ProductWeights};
use engine::Engine;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("step {h} does not divide the delay {tau} (ratio {ratio})")]
    StepDelayIncompatible { h: f64, tau: f64, ratio: f64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("solution diverged at grid index {index} (t = {time}): max norm {norm}")]
    Divergence { index: usize, time: f64, norm: f64 },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Criterion(#[from] CriterionError),
}

pub type Result<T> = std::result::Result<T, SolverError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    TemperedProductIntegration,
    ExpTransformCaputo,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::TemperedProductIntegration => "tempered_product_integration",
            Method::ExpTransformCaputo => "exp_transform_caputo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayGridPolicy {
    /// τ/h must be an integer within 1e-9 relative.
    RequireDivisible,
    /// Shrink h to τ / ceil(τ/h).
    AutoAdjustStep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub h: f64,
    pub method: Method,
    pub corrector_iterations: usize,
    pub delay_grid_policy: DelayGridPolicy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            h: 1e-3,
            method: Method::TemperedProductIntegration,
            corrector_iterations: 2,
            delay_grid_policy: DelayGridPolicy::AutoAdjustStep,
        }
    }
}

impl SolverConfig {
    pub fn with_step(h: f64) -> Self {
        Self { h, ..Self::default() }
    }

    pub fn with_method(self, method: Method) -> Self {
        Self { method, ..self }
    }

    /// The step actually used and the delay in steps.
    pub fn resolve_step(&self, tau: f64) -> Result<(f64, usize)> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(SolverError::InvalidConfig(format!(
                "step must be positive, got {}",
                self.h
            )));
        }
        if self.corrector_iterations == 0 {
            return Err(SolverError::InvalidConfig(
                "corrector_iterations must be at least 1".into(),
            ));
        }
        let ratio = tau / self.h;
        let m = match self.delay_grid_policy {
            DelayGridPolicy::RequireDivisible => {
                let m = ratio.round();
                if m < 1.0 || (ratio - m).abs() > 1e-9 * ratio {
                    return Err(SolverError::StepDelayIncompatible { h: self.h, tau, ratio });
                }
                m
            }
            DelayGridPolicy::AutoAdjustStep => (ratio - 1e-9 * ratio).ceil().max(1.0),
        };
        Ok((tau / m, m as usize))
    }
}

/// Grid solution. `grid[i] = i·h`; the last node is the first one at or past
/// the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub norm_track: Vec<f64>,
    pub method: Method,
    pub h: f64,
    /// τ / h
    pub delay_steps: usize,
}

impl Trajectory {
    fn new(states: Vec<Vec<f64>>, method: Method, h: f64, delay_steps: usize) -> Self {
        let grid = (0..states.len()).map(|i| i as f64 * h).collect();
        let norm_track = states
            .iter()
            .map(|s| s.iter().fold(0.0f64, |m, x| m.max(x.abs())))
            .collect();
        Self {
            grid,
            states,
            norm_track,
            method,
            h,
            delay_steps,
        }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn max_norm(&self) -> f64 {
        self.norm_track.iter().copied().fold(0.0, f64::max)
    }

    /// `t,y1,…,yn,norm_inf` with 17 significant digits.
    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        let mut header = String::from("t");
        for i in 1..=self.dim() {
            header.push_str(&format!(",y{i}"));
        }
        header.push_str(",norm_inf");
        writeln!(out, "{header}")?;
        for ((t, s), n) in self.grid.iter().zip(&self.states).zip(&self.norm_track) {
            write!(out, "{t:.16e}")?;
            for v in s {
                write!(out, ",{v:.16e}")?;
            }
            writeln!(out, ",{n:.16e}")?;
        }
        Ok(())
    }
}

/// Delayed lookup: history for negative times, stored grid values otherwise.
fn delayed_state(spec: &SystemSpec, h: f64, m: usize, n: usize, states: &[Vec<f64>], out: &mut [f64]) {
    if n < m {
        spec.history().evaluate_into(-((m - n) as f64) * h, out);
    } else {
        out.copy_from_slice(&states[n - m]);
    }
}

pub fn solve(spec: &SystemSpec, cfg: &SolverConfig) -> Result<Trajectory> {
    solve_forced(spec, cfg, |_, _| {})
}

/// Like [`solve`] with an extra time-dependent term u(t) added to
/// A y + B y_τ + f, i.e. ᵀD^{α,ρ} y = e^{−ρt}(A y + B y_τ + f + u(t)).
/// `forcing(t, out)` adds u(t) to `out`.
pub fn solve_forced(spec: &SystemSpec, cfg: &SolverConfig, forcing: impl Fn(f64, &mut [f64])) -> Result<Trajectory> {
    let (h, m) = cfg.resolve_step(spec.tau())?;
    let steps = (spec.horizon() / h - 1e-9).ceil().max(1.0) as usize;
    let weights = ProductWeights::new(spec.alpha(), h, steps)?;
    let engine = Engine {
        weights: &weights,
        steps,
        dim: spec.dim(),
        sweeps: cfg.corrector_iterations,
    };
    let rho = spec.rho();
    let decay: Vec<f64> = (0..=steps).map(|k| (-rho * k as f64 * h).exp()).collect();
    let omega0 = spec.history().evaluate(0.0);

    let states = match cfg.method {
        Method::TemperedProductIntegration => engine.run(
            |n, out| {
                for (o, w) in out.iter_mut().zip(&omega0) {
                    *o = decay[n] * w;
                }
            },
            |n, j| decay[n - j] * decay[j],
            |n, states, out| delayed_state(spec, h, m, n, states, out),
            |n, y, yd, out| {
                spec.rhs_into(y, yd, out);
                forcing(n as f64 * h, out);
            },
        )?,
        Method::ExpTransformCaputo => {
            let grow = |k: f64| (rho * k * h).exp();
            let mut y = vec![0.0; spec.dim()];
            let mut yd = vec![0.0; spec.dim()];
            let z = engine.run(
                |_, out| out.copy_from_slice(&omega0),
                |_, _| 1.0,
                |n, states, out| {
                    // z(t − τ) = e^{ρ(t−τ)} y(t − τ), also on the history
                    if n < m {
                        spec.history().evaluate_into(-((m - n) as f64) * h, out);
                        let g = grow(n as f64 - m as f64);
                        out.iter_mut().for_each(|v| *v *= g);
                    } else {
                        out.copy_from_slice(&states[n - m]);
                    }
                },
                |n, z, zd, out| {
                    let (d, dd) = (grow(-(n as f64)), grow(m as f64 - n as f64));
                    for i in 0..z.len() {
                        y[i] = d * z[i];
                        yd[i] = dd * zd[i];
                    }
                    spec.rhs_into(&y, &yd, out);
                    forcing(n as f64 * h, out);
                },
            )?;
            z.into_iter()
                .enumerate()
                .map(|(n, zn)| {
                    let d = if n == 0 { 1.0 } else { grow(-(n as f64)) };
                    zn.into_iter().map(|v| d * v).collect()
                })
                .collect()
        }
    };
    Ok(Trajectory::new(states, cfg.method, h, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_functions::MatrixNxN;
    use crate::system_model::{HistoryFunction, Nonlinearity, Shape};
    use crate::tempered_operators::TemperedOrder;

    fn decay_spec(v: Vec<f64>, rho: f64) -> SystemSpec {
        let n = v.len();
        SystemSpec::new(
            TemperedOrder::new(0.4, rho).unwrap(),
            0.25,
            2.0,
            MatrixNxN::zeros(n),
            MatrixNxN::zeros(n),
            Nonlinearity::none(),
            HistoryFunction::constant(v).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn step_resolution() {
        let mut cfg = SolverConfig::with_step(1e-3);
        assert_eq!(cfg.resolve_step(0.2).unwrap().1, 200);
        cfg.delay_grid_policy = DelayGridPolicy::RequireDivisible;
        assert_eq!(cfg.resolve_step(0.2).unwrap().1, 200);
        cfg.h = 0.03;
        assert!(matches!(
            cfg.resolve_step(0.2),
            Err(SolverError::StepDelayIncompatible { .. })
        ));
        cfg.delay_grid_policy = DelayGridPolicy::AutoAdjustStep;
        let (h, m) = cfg.resolve_step(0.2).unwrap();
        assert_eq!(m, 7);
        assert!((h - 0.2 / 7.0).abs() < 1e-16);
        cfg.corrector_iterations = 0;
        assert!(cfg.resolve_step(0.2).is_err());
    }

    #[test]
    fn pure_decay_is_reproduced() {
        let spec = decay_spec(vec![1.5, -0.5], 0.7);
        for method in [Method::TemperedProductIntegration, Method::ExpTransformCaputo] {
            let traj = solve(&spec, &SolverConfig::with_step(0.01).with_method(method)).unwrap();
            assert_eq!(traj.states[0], vec![1.5, -0.5]);
            for (t, s) in traj.grid.iter().zip(&traj.states) {
                let e = (-0.7 * t).exp();
                assert!((s[0] - 1.5 * e).abs() <= 1e-8 && (s[1] + 0.5 * e).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn zero_history_and_zero_fixed_nonlinearity_stay_at_rest() {
        let f = Nonlinearity::linear_combo(2.0, Shape::SinElementwise, -3.0, Shape::SinElementwise, 3.0).unwrap();
        let spec = SystemSpec::new(
            TemperedOrder::new(0.3, 0.8).unwrap(),
            0.2,
            3.0,
            MatrixNxN::from_rows(&[vec![-2.0, 0.0], vec![0.0, -2.0]]).unwrap(),
            MatrixNxN::from_rows(&[vec![3.0, -4.0], vec![0.0, 0.0]]).unwrap(),
            f,
            HistoryFunction::constant(vec![0.0, 0.0]).unwrap(),
        )
        .unwrap();
        let traj = solve(&spec, &SolverConfig::with_step(0.01)).unwrap();
        assert_eq!(traj.max_norm(), 0.0);
        assert_eq!(traj.len(), 301);
    }

    #[test]
    fn divergence_is_reported_with_index() {
        let spec = SystemSpec::new(
            TemperedOrder::new(0.9, 0.1).unwrap(),
            0.1,
            50.0,
            MatrixNxN::from_rows(&[vec![5.0]]).unwrap(),
            MatrixNxN::zeros(1),
            Nonlinearity::none(),
            HistoryFunction::constant(vec![1.0]).unwrap(),
        )
        .unwrap();
        match solve(&spec, &SolverConfig::with_step(0.05)) {
            Err(SolverError::Divergence { index, norm, .. }) => {
                assert!(index > 0);
                assert!(norm > 1e12);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn csv_layout() {
        let traj = solve(&decay_spec(vec![1.0], 0.5), &SolverConfig::with_step(0.25)).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,y1,norm_inf"));
        let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first, vec![0.0, 1.0, 1.0]);
        assert_eq!(text.lines().count(), traj.len() + 1);
    }
}
