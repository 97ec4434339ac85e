use super::{Result, SpecialError};

/// Square dense matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixNxN {
    n: usize,
    entries: Vec<f64>,
}

impl MatrixNxN {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(SpecialError::InvalidMatrix("order must be at least 1".into()));
        }
        if entries.len() != n * n {
            return Err(SpecialError::InvalidMatrix(format!(
                "expected {} entries for order {n}, got {}",
                n * n,
                entries.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|v| !v.is_finite()) {
            return Err(SpecialError::InvalidMatrix(format!(
                "entry ({}, {}) is not finite",
                pos / n,
                pos % n
            )));
        }
        Ok(Self { n, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(SpecialError::InvalidMatrix(format!(
                "row {i} has {} entries, matrix is not square ({n} rows)",
                row.len()
            )));
        }
        Self::new(n, rows.iter().flatten().copied().collect())
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        Self { n, entries }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![0.0; n * n],
        }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|v| v * c).collect(),
        }
    }

    /// `out = self · x`
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        for (row, o) in self.entries.chunks(self.n).zip(out.iter_mut()) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.mul_vec_into(x, &mut out);
        out
    }

    /// Maximum absolute row sum (the ∞-norm induced by the max vector norm).
    pub fn norm_inf(&self) -> f64 {
        self.entries
            .chunks(self.n)
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&v| v == 0.0)
    }

    pub fn max_singular_value(&self) -> f64 {
        max_singular_value(self)
    }
}

/// Largest singular value (spectral norm) by one-sided Jacobi: columns are
/// rotated pairwise until mutually orthogonal, which diagonalizes MᵀM
/// implicitly; the singular values are then the column norms.
pub fn max_singular_value(m: &MatrixNxN) -> f64 {
    let n = m.n;
    // column-major working copy
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| m.get(i, j)).collect()).collect();
    const MAX_SWEEPS: usize = 60;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = cols[p].iter().map(|v| v * v).sum();
                let beta: f64 = cols[q].iter().map(|v| v * v).sum();
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(a, b)| a * b).sum();
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                for (up, uq) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let a = *up;
                    let b = *uq;
                    *up = c * a - s * b;
                    *uq = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    cols.iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}
