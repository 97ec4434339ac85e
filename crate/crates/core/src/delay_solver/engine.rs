//! Fractional Adams-Bashforth-Moulton scheme for Abel-Volterra equations
//!
//! x(t_n) = base_n + I^α[κ_n · G](t_n),
//!
//! where G depends on the current and the delayed state and κ_n(j) is a
//! per-node factor multiplying the kernel. Rectangle weights predict, the
//! product trapezoid rule corrects.

use super::SolverError;
use crate::tempered_operators::ProductWeights;

/// Above this max-norm a run is declared divergent.
pub(crate) const DIVERGENCE_LIMIT: f64 = 1e12;

pub(crate) struct Engine<'w> {
    pub weights: &'w ProductWeights,
    pub steps: usize,
    pub dim: usize,
    pub sweeps: usize,
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl Engine<'_> {
    /// `base(n, out)` writes the free term, `kernel(n, j)` the node factor,
    /// `delayed(n, states, out)` the state at t_n − τ and
    /// `rhs(n, x, x_delayed, out)` the integrand G.
    pub fn run(
        &self,
        base: impl Fn(usize, &mut [f64]),
        kernel: impl Fn(usize, usize) -> f64,
        delayed: impl Fn(usize, &[Vec<f64>], &mut [f64]),
        mut rhs: impl FnMut(usize, &[f64], &[f64], &mut [f64]),
    ) -> Result<Vec<Vec<f64>>, SolverError> {
        let d = self.dim;
        let w = self.weights;
        let (rect_scale, trap_scale) = (w.rectangle_scale(), w.trapezoid_scale());

        let mut states: Vec<Vec<f64>> = Vec::with_capacity(self.steps + 1);
        let mut g: Vec<Vec<f64>> = Vec::with_capacity(self.steps + 1);
        let mut x = vec![0.0; d];
        let mut xd = vec![0.0; d];
        let mut b = vec![0.0; d];
        let mut gn = vec![0.0; d];
        let mut pred_sum = vec![0.0; d];
        let mut corr_sum = vec![0.0; d];

        base(0, &mut x);
        delayed(0, &states, &mut xd);
        rhs(0, &x, &xd, &mut gn);
        states.push(x.clone());
        g.push(gn.clone());

        for n in 1..=self.steps {
            base(n, &mut b);
            pred_sum.fill(0.0);
            corr_sum.fill(0.0);
            for (j, gj) in g.iter().enumerate() {
                let k = kernel(n, j);
                let (wp, wc) = (w.rectangle(n, j) * k, w.trapezoid(n, j) * k);
                for i in 0..d {
                    pred_sum[i] += wp * gj[i];
                    corr_sum[i] += wc * gj[i];
                }
            }
            delayed(n, &states, &mut xd);
            for i in 0..d {
                x[i] = b[i] + rect_scale * pred_sum[i];
            }
            let k_nn = kernel(n, n);
            for _ in 0..self.sweeps {
                rhs(n, &x, &xd, &mut gn);
                for i in 0..d {
                    x[i] = b[i] + trap_scale * (corr_sum[i] + k_nn * gn[i]);
                }
            }
            let norm = norm_inf(&x);
            if !(norm <= DIVERGENCE_LIMIT) {
                return Err(SolverError::Divergence {
                    index: n,
                    time: n as f64 * w.step(),
                    norm,
                });
            }
            rhs(n, &x, &xd, &mut gn);
            states.push(x.clone());
            g.push(gn.clone());
        }
        Ok(states)
    }
}
