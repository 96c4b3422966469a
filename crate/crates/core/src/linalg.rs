//! Small dense complex matrices: just enough for zero-forcing precoders.

use alloc::vec::Vec;

use libm::sqrt;
use num_complex::Complex64;

use crate::{Error, Result};

/// Column-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: alloc::vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Self {
        let rows = columns.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            assert_eq!(c.len(), rows, "ragged columns");
            data.extend_from_slice(c);
        }
        CMatrix { rows, cols: columns.len(), data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[c * self.rows + r] = v;
    }

    pub fn column(&self, c: usize) -> &[Complex64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn column_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// Gram matrix AᴴA.
    pub fn gram(&self) -> CMatrix {
        let n = self.cols;
        let mut g = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = dot(self.column(i), self.column(j));
                g.set(i, j, v);
                g.set(j, i, v.conj());
            }
        }
        g
    }

    /// Product A·B.
    pub fn mul(&self, b: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, b.rows);
        let mut out = CMatrix::zeros(self.rows, b.cols);
        for j in 0..b.cols {
            for k in 0..self.cols {
                let bkj = b.get(k, j);
                let col = self.column(k);
                let dst = out.column_mut(j);
                for (d, a) in dst.iter_mut().zip(col) {
                    *d += a * bkj;
                }
            }
        }
        out
    }
}

/// Inner product aᴴb.
#[inline]
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    sqrt(a.iter().map(|x| x.norm_sqr()).sum())
}

/// Lower-triangular Cholesky factor of a Hermitian positive-definite matrix.
pub fn cholesky(a: &CMatrix) -> Result<CMatrix> {
    let n = a.rows();
    let mut l = CMatrix::zeros(n, n);
    // Pivots this small relative to the diagonal mean rank deficiency.
    let scale = (0..n).map(|i| a.get(i, i).re.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for j in 0..n {
        let mut d = a.get(j, j).re;
        for k in 0..j {
            d -= l.get(j, k).norm_sqr();
        }
        if !(d > 1e-12 * scale) {
            return Err(Error::Singular { rows: n, cols: n });
        }
        let djj = sqrt(d);
        l.set(j, j, Complex64::new(djj, 0.0));
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k).conj();
            }
            l.set(i, j, s / djj);
        }
    }
    Ok(l)
}

/// Inverse of a Hermitian positive-definite matrix via its Cholesky factor.
pub fn hpd_inverse(a: &CMatrix) -> Result<CMatrix> {
    let n = a.rows();
    let l = cholesky(a)?;
    let mut inv = CMatrix::zeros(n, n);
    for c in 0..n {
        // Solve L y = e_c, then Lᴴ x = y.
        let mut y = alloc::vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut s = if i == c { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            for (k, yk) in y.iter().enumerate().take(i) {
                s -= l.get(i, k) * yk;
            }
            y[i] = s / l.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l.get(k, i).conj() * inv.get(k, c);
            }
            inv.set(i, c, s / l.get(i, i));
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn inverse_of_hermitian_matrix() {
        let a = CMatrix::from_columns(&[
            alloc::vec![c(4.0, 0.0), c(1.0, -1.0), c(0.5, 0.0)],
            alloc::vec![c(1.0, 1.0), c(3.0, 0.0), c(0.0, 0.2)],
            alloc::vec![c(0.5, 0.0), c(0.0, -0.2), c(2.0, 0.0)],
        ]);
        let inv = hpd_inverse(&a).unwrap();
        let id = a.mul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id.get(i, j) - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn dependent_columns_are_singular() {
        let v = alloc::vec![c(1.0, 0.5), c(-0.3, 0.0)];
        let w: Vec<Complex64> = v.iter().map(|x| x * c(0.0, 2.0)).collect();
        let g = CMatrix::from_columns(&[v, w]).gram();
        assert!(matches!(cholesky(&g), Err(Error::Singular { .. })));
    }
}
