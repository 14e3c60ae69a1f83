use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Dense row-major matrix of `f64`.
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

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

/// Dot product with four independent accumulators (vectorizes; the
/// summation order is fixed, so results are reproducible).
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `out += m * x`
#[inline]
pub(crate) fn gemv_acc(m: &Matrix, x: &[f64], out: &mut [f64]) {
    for (r, o) in out.iter_mut().enumerate() {
        *o += dot(m.row(r), x);
    }
}

/// `out += m^T v`, four rows at a time so `out` is streamed once per block.
#[inline]
pub(crate) fn gemv_t_acc(m: &Matrix, v: &[f64], out: &mut [f64]) {
    debug_assert_eq!(v.len(), m.rows);
    let blocks = v.len() / 4;
    for b in 0..blocks {
        let k = 4 * b;
        let (a0, a1, a2, a3) = (v[k], v[k + 1], v[k + 2], v[k + 3]);
        if a0 == 0.0 && a1 == 0.0 && a2 == 0.0 && a3 == 0.0 {
            continue;
        }
        let (r0, r1, r2, r3) = (m.row(k), m.row(k + 1), m.row(k + 2), m.row(k + 3));
        for (j, o) in out.iter_mut().enumerate() {
            *o += (a0 * r0[j] + a1 * r1[j]) + (a2 * r2[j] + a3 * r3[j]);
        }
    }
    for (r, &vr) in v.iter().enumerate().skip(4 * blocks) {
        if vr != 0.0 {
            axpy(vr, m.row(r), out);
        }
    }
}

#[inline]
pub(crate) fn outer_acc(m: &mut Matrix, u: &[f64], v: &[f64]) {
    for (r, &ur) in u.iter().enumerate() {
        if ur != 0.0 {
            axpy(ur, v, m.row_mut(r));
        }
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_handles_remainders() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [1.0; 6];
        assert_eq!(dot(&a, &b), 21.0);
        assert_eq!(dot(&[], &[]), 0.0);
    }

    #[test]
    fn gemv_and_transpose_agree_with_hand_math() {
        let m = Matrix::from_vec(2, 3, alloc::vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut out = [0.0; 2];
        gemv_acc(&m, &[1.0, 0.0, -1.0], &mut out);
        assert_eq!(out, [-2.0, -2.0]);
        let mut out = [0.0; 3];
        gemv_t_acc(&m, &[1.0, 1.0], &mut out);
        assert_eq!(out, [5.0, 7.0, 9.0]);
        let mut g = Matrix::zeros(2, 3);
        outer_acc(&mut g, &[1.0, 2.0], &[1.0, 0.0, 3.0]);
        assert_eq!(g.as_slice(), &[1.0, 0.0, 3.0, 2.0, 0.0, 6.0]);
    }

    #[test]
    fn from_vec_checks_length() {
        assert!(Matrix::from_vec(2, 2, alloc::vec![0.0; 3]).is_err());
    }
}
