//! Dense row-major matrices and the Cholesky factorization used by the
//! regression and bound code.
//!
//! Only what the GP needs lives here: symmetric positive-definite
//! factorization, triangular solves (single right-hand side and blocked
//! multi-column) and log-determinants.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Adds `v` to every diagonal entry.
    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.rows.min(self.cols) {
            self.data[i * self.cols + i] += v;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for x in &mut self.data {
            *x *= s;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|x| x * x).sum())
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::LengthMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// `vᵀ A v` for a square matrix.
    pub fn quadratic_form(&self, v: &[f64]) -> Result<f64> {
        let av = self.mul_vec(v)?;
        Ok(dot(&av, v))
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    n: usize,
    // Row-major, upper triangle left at zero.
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors a symmetric matrix, reading only its lower triangle.
    ///
    /// Fails with [`Error::NotPositiveDefinite`] at the first pivot that is
    /// not strictly positive (or not finite).
    pub fn factor(a: &Matrix) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::DimensionMismatch {
                expected: a.rows,
                found: a.cols,
            });
        }
        let n = a.rows;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let s = dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
                let v = a.get(i, j) - s;
                if i == j {
                    if !(v > 0.0) || !v.is_finite() {
                        return Err(Error::NotPositiveDefinite { index: i, pivot: v });
                    }
                    l[i * n + i] = libm::sqrt(v);
                } else {
                    l[i * n + j] = v / l[j * n + j];
                }
            }
        }
        Ok(Self { n, l })
    }

    pub fn empty() -> Self {
        Self {
            n: 0,
            l: Vec::new(),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.n + j]
    }

    /// `L Lᵀ`, used to verify the factorization.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.n;
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = dot(&self.l[i * n..i * n + j + 1], &self.l[j * n..j * n + j + 1]);
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }

    /// `ln det A = 2 Σ ln L_ii`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n)
            .map(|i| libm::log(self.entry(i, i)))
            .sum::<f64>()
    }

    /// Overwrites `b` with `L⁻¹ b`.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        let n = self.n;
        for i in 0..n {
            let s = dot(&self.l[i * n..i * n + i], &b[..i]);
            b[i] = (b[i] - s) / self.l[i * n + i];
        }
    }

    /// Overwrites `b` with `L⁻ᵀ b`.
    pub fn solve_upper_in_place(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        let n = self.n;
        for i in (0..n).rev() {
            let bi = b[i] / self.l[i * n + i];
            b[i] = bi;
            for j in 0..i {
                b[j] -= self.l[i * n + j] * bi;
            }
        }
    }

    /// Overwrites `b` with `A⁻¹ b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        self.solve_lower_in_place(b);
        self.solve_upper_in_place(b);
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: b.len(),
            });
        }
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    /// Blocked forward substitution: `B` is `n × cols` row-major and is
    /// overwritten with `L⁻¹ B`. Inner loops run along contiguous rows.
    pub fn solve_lower_columns(&self, b: &mut [f64], cols: usize) {
        debug_assert_eq!(b.len(), self.n * cols);
        let n = self.n;
        for i in 0..n {
            let (done, rest) = b.split_at_mut(i * cols);
            let row_i = &mut rest[..cols];
            for j in 0..i {
                let lij = self.l[i * n + j];
                if lij != 0.0 {
                    axpy(-lij, &done[j * cols..(j + 1) * cols], row_i);
                }
            }
            let inv = 1.0 / self.l[i * n + i];
            for v in row_i.iter_mut() {
                *v *= inv;
            }
        }
    }

    /// Blocked back substitution: overwrites `B` with `L⁻ᵀ B`.
    pub fn solve_upper_columns(&self, b: &mut [f64], cols: usize) {
        debug_assert_eq!(b.len(), self.n * cols);
        let n = self.n;
        for i in (0..n).rev() {
            let (head, tail) = b.split_at_mut((i + 1) * cols);
            let row_i = &mut head[i * cols..];
            for j in (i + 1)..n {
                let lji = self.l[j * n + i];
                if lji != 0.0 {
                    axpy(-lji, &tail[(j - i - 1) * cols..(j - i) * cols], row_i);
                }
            }
            let inv = 1.0 / self.l[i * n + i];
            for v in row_i.iter_mut() {
                *v *= inv;
            }
        }
    }
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
