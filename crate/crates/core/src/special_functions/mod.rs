//! Scalar special functions used by the stability criteria and the
//! fractional kernels: Gamma, lower incomplete Gamma, the one-parameter
//! Mittag-Leffler function, and the spectral norm of small dense matrices.
//!
//! Everything here is a pure function of its inputs.

mod gamma;
mod matrix;
mod mittag_leffler;

pub use gamma::{gamma, ln_gamma, lower_incomplete_gamma, recip_gamma, regularized_lower_gamma};
pub use matrix::{max_singular_value, MatrixNxN};
pub use mittag_leffler::{mittag_leffler, mittag_leffler_with, MlEvalPolicy};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialError {
    #[error("{function}: argument {value} outside the domain ({requirement})")]
    Domain {
        function: &'static str,
        value: f64,
        requirement: &'static str,
    },
    #[error("{function}: result overflows for argument {value}")]
    Overflow { function: &'static str, value: f64 },
    #[error("mittag_leffler(alpha={alpha}, z={z}) did not converge after {terms} terms")]
    NonConvergence { alpha: f64, z: f64, terms: usize },
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
}

pub type Result<T> = std::result::Result<T, SpecialError>;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}
