use std::f64::consts::PI;

use super::{Diagnostic, ModelError};

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Constant(Vec<f64>),
    CosWave {
        amplitude: Vec<f64>,
        frequency: Vec<f64>,
        offset: Vec<f64>,
    },
    Sampled {
        times: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
}

/// Initial function ω on [−τ, 0].
///
/// Sampled histories interpolate linearly and hold the end values outside
/// the sampled range; a single sample is a constant history.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryFunction(Repr);

fn all_finite(field: &str, v: &[f64], diags: &mut Vec<Diagnostic>) {
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        diags.push(Diagnostic::new(format!("{field}[{i}]"), "must be finite"));
    }
}

impl HistoryFunction {
    pub fn constant(values: Vec<f64>) -> Result<Self, ModelError> {
        let mut diags = Vec::new();
        if values.is_empty() {
            diags.push(Diagnostic::new("history.values", "must not be empty"));
        }
        all_finite("history.values", &values, &mut diags);
        ModelError::check(diags)?;
        Ok(Self(Repr::Constant(values)))
    }

    /// ω_i(t) = amplitude_i · cos(frequency_i · t) + offset_i
    pub fn cos_wave(amplitude: Vec<f64>, frequency: Vec<f64>, offset: Vec<f64>) -> Result<Self, ModelError> {
        let mut diags = Vec::new();
        if amplitude.is_empty() {
            diags.push(Diagnostic::new("history.amplitude", "must not be empty"));
        }
        for (field, v) in [("history.frequency", &frequency), ("history.offset", &offset)] {
            if v.len() != amplitude.len() {
                diags.push(Diagnostic::new(
                    field,
                    format!("has {} entries, amplitude has {}", v.len(), amplitude.len()),
                ));
            }
        }
        all_finite("history.amplitude", &amplitude, &mut diags);
        all_finite("history.frequency", &frequency, &mut diags);
        all_finite("history.offset", &offset, &mut diags);
        ModelError::check(diags)?;
        Ok(Self(Repr::CosWave {
            amplitude,
            frequency,
            offset,
        }))
    }

    pub fn sampled(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let mut diags = Vec::new();
        if times.is_empty() {
            diags.push(Diagnostic::new("history.times", "must not be empty"));
        }
        if times.len() != values.len() {
            diags.push(Diagnostic::new(
                "history.values",
                format!("has {} rows, times has {}", values.len(), times.len()),
            ));
        }
        all_finite("history.times", &times, &mut diags);
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            diags.push(Diagnostic::new(
                format!("history.times[{}]", i + 1),
                "times must be strictly increasing",
            ));
        }
        let dim = values.first().map_or(0, Vec::len);
        if dim == 0 && !values.is_empty() {
            diags.push(Diagnostic::new("history.values[0]", "must not be empty"));
        }
        for (i, row) in values.iter().enumerate() {
            if row.len() != dim {
                diags.push(Diagnostic::new(
                    format!("history.values[{i}]"),
                    format!("has {} entries, expected {dim}", row.len()),
                ));
            }
            all_finite(&format!("history.values[{i}]"), row, &mut diags);
        }
        ModelError::check(diags)?;
        Ok(Self(Repr::Sampled { times, values }))
    }

    pub fn dim(&self) -> usize {
        match &self.0 {
            Repr::Constant(v) => v.len(),
            Repr::CosWave { amplitude, .. } => amplitude.len(),
            Repr::Sampled { values, .. } => values[0].len(),
        }
    }

    pub fn evaluate_into(&self, t: f64, out: &mut [f64]) {
        match &self.0 {
            Repr::Constant(v) => out.copy_from_slice(v),
            Repr::CosWave {
                amplitude,
                frequency,
                offset,
            } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = amplitude[i] * (frequency[i] * t).cos() + offset[i];
                }
            }
            Repr::Sampled { times, values } => {
                let last = times.len() - 1;
                if t <= times[0] {
                    out.copy_from_slice(&values[0]);
                } else if t >= times[last] {
                    out.copy_from_slice(&values[last]);
                } else {
                    let k = times.partition_point(|&s| s <= t) - 1;
                    let w = (t - times[k]) / (times[k + 1] - times[k]);
                    for (i, o) in out.iter_mut().enumerate() {
                        *o = (1.0 - w) * values[k][i] + w * values[k + 1][i];
                    }
                }
            }
        }
    }

    pub fn evaluate(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.evaluate_into(t, &mut out);
        out
    }

    /// ‖ω‖_C = sup over s ∈ [−τ, 0] of ‖ω(s)‖∞.
    ///
    /// Exact for the constant and cosine kinds. For sampled data this is the
    /// maximum over the samples, which is the exact supremum of the piecewise
    /// linear interpolant restricted to the sampled range.
    pub fn sup_norm(&self, tau: f64) -> f64 {
        match &self.0 {
            Repr::Constant(v) => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            Repr::CosWave {
                amplitude,
                frequency,
                offset,
            } => {
                let mut best = 0.0f64;
                for i in 0..amplitude.len() {
                    // cos is even, so only |frequency|·τ matters
                    let span = frequency[i].abs() * tau;
                    let cos_min = if span >= PI { -1.0 } else { span.cos() };
                    let (a, c) = (amplitude[i], offset[i]);
                    best = best.max((a + c).abs()).max((a * cos_min + c).abs());
                }
                best
            }
            Repr::Sampled { values, .. } => values.iter().flat_map(|r| r.iter()).fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    pub(crate) fn sample_times(&self) -> Option<&[f64]> {
        match &self.0 {
            Repr::Sampled { times, .. } => Some(times),
            _ => None,
        }
    }

    pub(crate) fn as_constant(&self) -> Option<&[f64]> {
        match &self.0 {
            Repr::Constant(v) => Some(v),
            _ => None,
        }
    }

    pub(crate) fn as_cos_wave(&self) -> Option<(&[f64], &[f64], &[f64])> {
        match &self.0 {
            Repr::CosWave {
                amplitude,
                frequency,
                offset,
            } => Some((amplitude, frequency, offset)),
            _ => None,
        }
    }

    pub(crate) fn as_sampled(&self) -> Option<(&[f64], &[Vec<f64>])> {
        match &self.0 {
            Repr::Sampled { times, values } => Some((times, values)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_example_history_norm() {
        let h = HistoryFunction::cos_wave(vec![0.01, 0.0], vec![PI, 0.0], vec![0.0, 0.01]).unwrap();
        assert!((h.sup_norm(0.2) - 0.01).abs() < 1e-15);
        assert_eq!(h.evaluate(0.0), vec![0.01, 0.01]);
    }

    #[test]
    fn cos_norm_matches_dense_sampling() {
        let h = HistoryFunction::cos_wave(vec![0.3, -0.2], vec![7.0, 2.5], vec![-0.25, 0.1]).unwrap();
        for &tau in &[0.1, 0.5, 1.3, 3.0] {
            let dense = (0..=20_000)
                .map(|k| -tau * k as f64 / 20_000.0)
                .map(|t| h.evaluate(t).iter().fold(0.0f64, |m, x| m.max(x.abs())))
                .fold(0.0, f64::max);
            assert!((h.sup_norm(tau) - dense).abs() < 1e-8, "tau={tau}");
        }
    }

    #[test]
    fn constant_and_single_sample() {
        let c = HistoryFunction::constant(vec![0.0, -0.5]).unwrap();
        assert_eq!(c.sup_norm(1.0), 0.5);
        let s = HistoryFunction::sampled(vec![0.0], vec![vec![0.3, -0.7]]).unwrap();
        assert_eq!(s.sup_norm(0.2), 0.7);
        assert_eq!(s.evaluate(-0.1), vec![0.3, -0.7]);
    }

    #[test]
    fn sampled_interpolates() {
        let s = HistoryFunction::sampled(vec![-1.0, 0.0], vec![vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(s.evaluate(-0.25), vec![1.5]);
        assert_eq!(s.evaluate(-5.0), vec![0.0]);
    }

    #[test]
    fn malformed_histories_rejected() {
        assert!(HistoryFunction::constant(vec![]).is_err());
        assert!(HistoryFunction::constant(vec![f64::INFINITY]).is_err());
        assert!(HistoryFunction::cos_wave(vec![1.0], vec![1.0, 2.0], vec![0.0]).is_err());
        assert!(HistoryFunction::sampled(vec![0.0, -1.0], vec![vec![1.0], vec![2.0]]).is_err());
        assert!(HistoryFunction::sampled(vec![-1.0, 0.0], vec![vec![1.0], vec![2.0, 3.0]]).is_err());
        let err = HistoryFunction::sampled(vec![-1.0, -1.0], vec![vec![1.0], vec![2.0]]).unwrap_err();
        assert!(err.to_string().contains("history.times[1]"));
    }
}
