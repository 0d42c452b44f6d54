//! Dense Hermitian matrices and the complex Cholesky factorization.
//!
//! Blocks here are small (N ≤ a few dozen), so storage is a full row-major
//! `Vec<Complex64>`. The slice-level functions exist for the estimator hot
//! loops, which reuse one buffer for millions of factorizations.

use crate::{Error, Result};
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    /// Wraps row-major storage. The caller guarantees Hermitian symmetry.
    pub fn from_row_major(n: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), n * n, "storage must be n*n");
        Self { n, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i].re).sum()
    }

    /// Adds `shift` to every diagonal entry.
    pub fn shift_diagonal(mut self, shift: f64) -> Self {
        for i in 0..self.n {
            self.data[i * self.n + i].re += shift;
        }
        self
    }

    pub fn scale(mut self, factor: f64) -> Self {
        for v in &mut self.data {
            *v *= factor;
        }
        self
    }

    pub fn cholesky(&self) -> Result<Cholesky> {
        let mut l = self.data.clone();
        cholesky_in_place(self.n, &mut l)?;
        Ok(Cholesky { n: self.n, l })
    }
}

/// Lower-triangular factor `L` with `M = L·Lᴴ` and a real positive diagonal.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<Complex64>,
}

impl Cholesky {
    /// Natural log of `det M`.
    pub fn ln_det(&self) -> f64 {
        ln_det_from_factor(self.n, &self.l)
    }

    pub fn log2_det(&self) -> f64 {
        self.ln_det() * std::f64::consts::LOG2_E
    }

    /// `yᴴ M⁻¹ y`.
    pub fn inv_quad_form(&self, y: &[Complex64]) -> f64 {
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.n];
        inv_quad_form(self.n, &self.l, y, &mut scratch)
    }
}

/// In-place complex Cholesky on the lower triangle of row-major storage.
/// The strict upper triangle is left untouched and must be ignored.
pub fn cholesky_in_place(n: usize, a: &mut [Complex64]) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let mut diag = a[j * n + j].re;
        for k in 0..j {
            diag -= a[j * n + k].norm_sqr();
        }
        if !(diag > 0.0) {
            return Err(Error::NotPositiveDefinite { row: j, pivot: diag });
        }
        let ljj = diag.sqrt();
        a[j * n + j] = Complex64::new(ljj, 0.0);
        let inv = 1.0 / ljj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k].conj();
            }
            a[i * n + j] = s * inv;
        }
    }
    Ok(())
}

pub fn ln_det_from_factor(n: usize, l: &[Complex64]) -> f64 {
    (0..n).map(|i| l[i * n + i].re.ln()).sum::<f64>() * 2.0
}

/// `|L⁻¹ y|²` by forward substitution, which equals `yᴴ (L·Lᴴ)⁻¹ y`.
pub fn inv_quad_form(n: usize, l: &[Complex64], y: &[Complex64], scratch: &mut [Complex64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * scratch[k];
        }
        let w = s / l[i * n + i].re;
        scratch[i] = w;
        acc += w.norm_sqr();
    }
    acc
}
