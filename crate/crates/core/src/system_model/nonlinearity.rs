use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Diagnostic, ModelError};

/// Elementwise shape applied to a state vector before scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Identity,
    SinElementwise,
}

impl Shape {
    fn apply(self, x: f64) -> f64 {
        match self {
            Shape::Identity => x,
            Shape::SinElementwise => x.sin(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityKind {
    None,
    LinearCombo,
}

/// f(t, y, y_τ) = c_state · shape_state(y) + c_delayed · shape_delayed(y_τ),
/// applied componentwise. Both shapes are 1-Lipschitz and vanish at 0, so
/// f(t, 0, 0) = 0 for every member of the family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nonlinearity {
    kind: NonlinearityKind,
    c_state: f64,
    c_delayed: f64,
    shape_state: Shape,
    shape_delayed: Shape,
    declared_lf: f64,
}

impl Nonlinearity {
    pub fn none() -> Self {
        Self {
            kind: NonlinearityKind::None,
            c_state: 0.0,
            c_delayed: 0.0,
            shape_state: Shape::Identity,
            shape_delayed: Shape::Identity,
            declared_lf: 0.0,
        }
    }

    pub fn linear_combo(
        c_state: f64,
        shape_state: Shape,
        c_delayed: f64,
        shape_delayed: Shape,
        declared_lf: f64,
    ) -> Result<Self, ModelError> {
        let mut diags = Vec::new();
        for (field, v) in [("nonlinearity.c_state", c_state), ("nonlinearity.c_delayed", c_delayed)] {
            if !v.is_finite() {
                diags.push(Diagnostic::new(field, format!("must be finite, got {v}")));
            }
        }
        if !(declared_lf >= 0.0) || !declared_lf.is_finite() {
            diags.push(Diagnostic::new(
                "nonlinearity.lf",
                format!("must be finite and nonnegative, got {declared_lf}"),
            ));
        } else if declared_lf < c_state.abs().max(c_delayed.abs()) {
            diags.push(Diagnostic::new(
                "nonlinearity.lf",
                format!(
                    "declared Lipschitz constant {declared_lf} is below max(|c_state|, |c_delayed|) = {}",
                    c_state.abs().max(c_delayed.abs())
                ),
            ));
        }
        ModelError::check(diags)?;
        Ok(Self {
            kind: NonlinearityKind::LinearCombo,
            c_state,
            c_delayed,
            shape_state,
            shape_delayed,
            declared_lf,
        })
    }

    pub fn kind(&self) -> NonlinearityKind {
        self.kind
    }

    pub fn is_none(&self) -> bool {
        self.kind == NonlinearityKind::None
    }

    pub fn c_state(&self) -> f64 {
        self.c_state
    }

    pub fn c_delayed(&self) -> f64 {
        self.c_delayed
    }

    pub fn shape_state(&self) -> Shape {
        self.shape_state
    }

    pub fn shape_delayed(&self) -> Shape {
        self.shape_delayed
    }

    /// The declared Lipschitz constant L_f.
    pub fn lipschitz(&self) -> f64 {
        self.declared_lf
    }

    /// Adds f(y, y_τ) to `out`.
    pub fn accumulate(&self, y: &[f64], y_delayed: &[f64], out: &mut [f64]) {
        if self.is_none() {
            return;
        }
        for ((o, &a), &b) in out.iter_mut().zip(y).zip(y_delayed) {
            *o += self.c_state * self.shape_state.apply(a) + self.c_delayed * self.shape_delayed.apply(b);
        }
    }

    pub fn evaluate(&self, y: &[f64], y_delayed: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        self.accumulate(y, y_delayed, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzReport {
    pub trials: usize,
    pub radius: f64,
    pub max_quotient: f64,
    pub declared_lf: f64,
    pub passed: bool,
}

const SAMPLE_DIM: usize = 3;

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Monte-Carlo check of
/// ‖f(y, y_τ) − f(z, z_τ)‖ ≤ L_f (‖y − z‖ + ‖y_τ − z_τ‖)
/// in the max norm, sampling points uniformly in a ball of the given radius.
/// A pass is evidence, not proof. Sampling is seeded, so repeated calls
/// agree.
///
/// The registry maps act componentwise with the same scalar law in every
/// component, so the max-norm quotient in any dimension is bounded by the
/// scalar one; sampling is done in a small fixed dimension.
pub fn validate_lipschitz(f: &Nonlinearity, trials: usize, radius: f64) -> LipschitzReport {
    let mut rng = ChaCha8Rng::seed_from_u64(0x005e_ed1f);
    let mut max_quotient = 0.0f64;
    let draw =
        |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..SAMPLE_DIM).map(|_| rng.random_range(-radius..=radius)).collect() };
    for _ in 0..trials.max(1) {
        let (y, yd, z, zd) = (draw(&mut rng), draw(&mut rng), draw(&mut rng), draw(&mut rng));
        let diff: Vec<f64> = f
            .evaluate(&y, &yd)
            .iter()
            .zip(f.evaluate(&z, &zd))
            .map(|(a, b)| a - b)
            .collect();
        let dy: Vec<f64> = y.iter().zip(&z).map(|(a, b)| a - b).collect();
        let dyd: Vec<f64> = yd.iter().zip(&zd).map(|(a, b)| a - b).collect();
        let denom = norm_inf(&dy) + norm_inf(&dyd);
        if denom > 0.0 {
            max_quotient = max_quotient.max(norm_inf(&diff) / denom);
        }
    }
    let declared_lf = f.lipschitz();
    LipschitzReport {
        trials: trials.max(1),
        radius,
        max_quotient,
        declared_lf,
        passed: max_quotient <= declared_lf * (1.0 + 1e-12),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_example_nonlinearity_passes() {
        let f = Nonlinearity::linear_combo(2.0, Shape::SinElementwise, -3.0, Shape::SinElementwise, 3.0).unwrap();
        let r = validate_lipschitz(&f, 2000, 1.0);
        assert!(r.passed);
        assert!(r.max_quotient > 1.0 && r.max_quotient <= 3.0);
    }

    #[test]
    fn second_example_nonlinearity_passes() {
        let f = Nonlinearity::linear_combo(0.03, Shape::Identity, 0.03, Shape::SinElementwise, 0.03).unwrap();
        assert!(validate_lipschitz(&f, 2000, 0.5).passed);
    }

    #[test]
    fn none_passes_trivially() {
        let r = validate_lipschitz(&Nonlinearity::none(), 10, 1.0);
        assert!(r.passed);
        assert_eq!(r.max_quotient, 0.0);
        assert_eq!(Nonlinearity::none().lipschitz(), 0.0);
    }

    #[test]
    fn underdeclared_constant_rejected() {
        let err = Nonlinearity::linear_combo(2.0, Shape::SinElementwise, -3.0, Shape::SinElementwise, 2.5).unwrap_err();
        assert!(err.to_string().contains("nonlinearity.lf"));
        assert!(Nonlinearity::linear_combo(f64::NAN, Shape::Identity, 0.0, Shape::Identity, 1.0).is_err());
    }

    #[test]
    fn vanishes_at_origin() {
        let f = Nonlinearity::linear_combo(2.0, Shape::SinElementwise, -3.0, Shape::Identity, 3.0).unwrap();
        assert_eq!(f.evaluate(&[0.0, 0.0], &[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn seeded_sampling_is_deterministic() {
        let f = Nonlinearity::linear_combo(1.0, Shape::SinElementwise, 0.5, Shape::Identity, 1.0).unwrap();
        assert_eq!(validate_lipschitz(&f, 100, 1.0), validate_lipschitz(&f, 100, 1.0));
    }
}
