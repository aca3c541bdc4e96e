//! Dense row-major matrices with rayon matrix-vector products.
//!
//! Operator matrices are large (order N^2) and applied to componentwise
//! vectors many times inside GMRES; Laplace-family operators are kept in real
//! storage to halve their footprint.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

/// Row-major complex dense matrix.
#[derive(Clone, Debug)]
pub struct CMat {
    pub n_rows: usize,
    pub n_cols: usize,
    pub data: Vec<C64>,
}

/// Row-major real dense matrix.
#[derive(Clone, Debug)]
pub struct RMat {
    pub n_rows: usize,
    pub n_cols: usize,
    pub data: Vec<f64>,
}

impl CMat {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        CMat { n_rows, n_cols, data: vec![C64::new(0.0, 0.0); n_rows * n_cols] }
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn matvec(&self, x: &[C64], out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(out.len(), self.n_rows);
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let row = &self.data[i * self.n_cols..(i + 1) * self.n_cols];
            let mut acc = C64::new(0.0, 0.0);
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            *o = acc;
        });
    }

    /// y = A^T x (used to precompute functional row vectors).
    pub fn matvec_transpose(&self, x: &[C64], out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.n_rows);
        debug_assert_eq!(out.len(), self.n_cols);
        out.par_iter_mut().enumerate().for_each(|(j, o)| {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..self.n_rows {
                acc += self.data[i * self.n_cols + j] * x[i];
            }
            *o = acc;
        });
    }
}

impl RMat {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        RMat { n_rows, n_cols, data: vec![0.0; n_rows * n_cols] }
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn matvec(&self, x: &[C64], out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(out.len(), self.n_rows);
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let row = &self.data[i * self.n_cols..(i + 1) * self.n_cols];
            let mut re = 0.0;
            let mut im = 0.0;
            for (a, b) in row.iter().zip(x) {
                re += a * b.re;
                im += a * b.im;
            }
            *o = C64::new(re, im);
        });
    }

    pub fn matvec_transpose(&self, x: &[C64], out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.n_rows);
        debug_assert_eq!(out.len(), self.n_cols);
        out.par_iter_mut().enumerate().for_each(|(j, o)| {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..self.n_rows {
                acc += x[i] * self.data[i * self.n_cols + j];
            }
            *o = acc;
        });
    }
}

/// Dense complex-matrix wrapper that is either real- or complex-valued.
#[derive(Clone, Debug)]
pub enum Mat {
    Complex(CMat),
    Real(RMat),
}

impl Mat {
    pub fn n_rows(&self) -> usize {
        match self {
            Mat::Complex(m) => m.n_rows,
            Mat::Real(m) => m.n_rows,
        }
    }

    pub fn matvec(&self, x: &[C64], out: &mut [C64]) {
        match self {
            Mat::Complex(m) => m.matvec(x, out),
            Mat::Real(m) => m.matvec(x, out),
        }
    }

    pub fn matvec_transpose(&self, x: &[C64], out: &mut [C64]) {
        match self {
            Mat::Complex(m) => m.matvec_transpose(x, out),
            Mat::Real(m) => m.matvec_transpose(x, out),
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.n_rows()];
        self.matvec(x, &mut out);
        out
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        match self {
            Mat::Complex(m) => m.data[i * m.n_cols + j],
            Mat::Real(m) => C64::new(m.data[i * m.n_cols + j], 0.0),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Mat::Complex(m) => m.data.iter().all(|c| c.re.is_finite() && c.im.is_finite()),
            Mat::Real(m) => m.data.iter().all(|c| c.is_finite()),
        }
    }
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Conjugated dot product <a, b> = sum conj(a_i) b_i.
pub fn vec_dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// y += alpha * x
pub fn vec_axpy(y: &mut [C64], alpha: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Max norm of a complex vector.
pub fn vec_inf_norm(x: &[C64]) -> f64 {
    x.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_and_complex_matvec_agree() {
        let n = 7;
        let mut cm = CMat::zeros(n, n);
        let mut rm = RMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let v = (i * 3 + j) as f64 * 0.1 - 1.0;
                cm.row_mut(i)[j] = C64::new(v, 0.0);
                rm.row_mut(i)[j] = v;
            }
        }
        let x: Vec<C64> =
            (0..n).map(|i| C64::new(i as f64 * 0.3, -(i as f64) * 0.7)).collect();
        let a = Mat::Complex(cm).apply(&x);
        let b = Mat::Real(rm).apply(&x);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).norm() < 1e-14);
        }
    }
}
