//! Dense row-major matrices and the handful of vector helpers the rest of the
//! crate needs. The networks and measurement blocks here are small enough that
//! a plain `Vec<f64>` beats pulling in a full linear-algebra stack.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
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
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim("row-major buffer", rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::dim("matrix row", cols, r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.cols.max(1))
            .map(<[f64]>::to_vec)
            .take(self.rows)
            .collect()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `self · v`
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ · v`
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                axpy(vi, self.row(i), &mut out);
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        debug_assert_eq!(self.cols, rhs.rows);
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    axpy(a, rhs.row(k), dst);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// `selfᵀ · rhs` without materializing the transpose.
    pub fn tr_matmul(&self, rhs: &Matrix) -> Matrix {
        debug_assert_eq!(self.rows, rhs.rows);
        let mut out = Matrix::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            let r = rhs.row(k);
            for (i, &a) in self.row(k).iter().enumerate() {
                if a != 0.0 {
                    axpy(a, r, &mut out.data[i * rhs.cols..(i + 1) * rhs.cols]);
                }
            }
        }
        out
    }

    pub fn scaled(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        debug_assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        debug_assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y ← y + alpha·x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(c: f64, v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| c * x).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Angle between two nonzero vectors.
///
/// Uses `2·atan2(‖â − b̂‖, ‖â + b̂‖)`, which is exactly zero for parallel
/// inputs and accurate near `0` and `π`, where `acos` of a clamped cosine
/// loses half the digits.
pub fn angle(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    let (mut diff, mut sum) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (u, v) = (x / na, y / nb);
        diff += (u - v) * (u - v);
        sum += (u + v) * (u + v);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

/// Largest singular value by power iteration on `AᵀA`.
///
/// Starts from the normalized all-ones vector so results are reproducible.
/// Convergence is declared when the Rayleigh quotient changes by at most
/// `tol` relative to its magnitude.
pub fn spectral_norm(a: &Matrix, tol: f64, max_iters: usize) -> Result<f64> {
    let p = a.cols();
    if p == 0 || a.rows() == 0 {
        return Ok(0.0);
    }
    let mut v = vec![1.0 / (p as f64).sqrt(); p];
    let mut prev = f64::NAN;
    for _ in 0..max_iters {
        let av = a.mul_vec(&v);
        let mut w = a.tr_mul_vec(&av);
        // Rayleigh quotient of AᵀA at the unit vector v.
        let rq = dot(&av, &av);
        let wn = norm(&w);
        if wn == 0.0 || !wn.is_finite() {
            if rq == 0.0 {
                // Start vector lies in the null space; the matrix may still be
                // nonzero, so fall back to the largest column norm direction.
                return fallback_spectral_norm(a, tol, max_iters);
            }
            return Err(Error::Numerical("power iteration produced a non-finite iterate".into()));
        }
        w.iter_mut().for_each(|x| *x /= wn);
        if (rq - prev).abs() <= tol * rq.max(f64::MIN_POSITIVE) {
            return Ok(rq.sqrt());
        }
        prev = rq;
        v = w;
    }
    Err(Error::Numerical(format!(
        "power iteration did not converge within {max_iters} iterations"
    )))
}

fn fallback_spectral_norm(a: &Matrix, tol: f64, max_iters: usize) -> Result<f64> {
    if a.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let at = a.transpose();
    let best = (0..a.rows())
        .max_by(|&i, &j| norm(a.row(i)).total_cmp(&norm(a.row(j))))
        .unwrap_or(0);
    let mut v = a.row(best).to_vec();
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    let mut prev = f64::NAN;
    for _ in 0..max_iters {
        let av = a.mul_vec(&v);
        let rq = dot(&av, &av);
        let mut w = at.mul_vec(&av);
        let wn = norm(&w);
        w.iter_mut().for_each(|x| *x /= wn);
        if (rq - prev).abs() <= tol * rq {
            return Ok(rq.sqrt());
        }
        prev = rq;
        v = w;
    }
    Err(Error::Numerical(format!(
        "power iteration did not converge within {max_iters} iterations"
    )))
}
